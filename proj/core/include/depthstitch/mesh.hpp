#pragma once

#include <array>
#include <vector>

#include "depthstitch/geometry.hpp"

namespace depthstitch {

enum class VertexKind { Corner, Border, Polygon, Feature };

struct MeshVertex {
  ImagePoint position;
  VertexKind kind = VertexKind::Polygon;
  int match_index = -1;  // >= 0 for feature vertices: index into the match set
};

struct VertexSet {
  std::vector<MeshVertex> vertices;
};

// Triangulation over the vertex set. Vertex positions are quantized to a
// 1/1024 px grid (the same grid the triangulation predicates run on), so all
// geometric invariants: positive orientation, pairwise-disjoint interiors,
// exact cover of the convex hull: hold exactly on the stored coordinates.
struct TriangleMesh {
  std::vector<MeshVertex> vertices;
  std::vector<std::array<int, 3>> triangles;  // positive signed area order
};

// Image-rectangle corners at (+-0.5), border points every border_step px
// along each edge, the polygon vertices, then the feature points (carrying
// their match index). Points within 0.5 px of an earlier vertex are dropped;
// a dropped feature donates its match index to the surviving vertex when that
// one has none. Polygon and feature points are clamped into the rectangle.
VertexSet build_vertex_set(int width, int height,
                           const std::vector<std::vector<ImagePoint>>& polygons,
                           const std::vector<ImagePoint>& feature_points,
                           const std::vector<int>& feature_match_indices,
                           double border_step);

// Delaunay triangulation (Bowyer-Watson with exact integer predicates on the
// snapped coordinates). Throws DegenerateInput when fewer than 3 distinct
// vertices remain or all of them are collinear.
TriangleMesh delaunay(const VertexSet& vertices);

// Twice the signed area is the standard shoelace cross product; > 0 for every
// mesh triangle.
double triangle_signed_area(const TriangleMesh& mesh, int t);

}  // namespace depthstitch
