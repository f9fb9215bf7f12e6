#include "depthstitch/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace depthstitch {

namespace {

constexpr double kGrid = 1024.0;  // snapping resolution, 1/1024 px
// Keeps every in-circle determinant term within __int128: coordinates after
// snapping and auxiliary-box expansion must stay below ~5e8 grid units.
constexpr int64_t kCoordLimit = 500000000;

struct GridPoint {
  int64_t x = 0;
  int64_t y = 0;
  bool operator==(const GridPoint& o) const { return x == o.x && y == o.y; }
};

// > 0 when c lies to the left of a->b in standard axes (positive signed
// area of (a, b, c)). Exact.
__int128 orient(const GridPoint& a, const GridPoint& b, const GridPoint& c) {
  const __int128 abx = b.x - a.x, aby = b.y - a.y;
  const __int128 acx = c.x - a.x, acy = c.y - a.y;
  return abx * acy - aby * acx;
}

// > 0 when d lies strictly inside the circumcircle of the positively
// oriented triangle (a, b, c). Exact.
__int128 in_circle(const GridPoint& a, const GridPoint& b, const GridPoint& c,
                   const GridPoint& d) {
  const __int128 adx = a.x - d.x, ady = a.y - d.y;
  const __int128 bdx = b.x - d.x, bdy = b.y - d.y;
  const __int128 cdx = c.x - d.x, cdy = c.y - d.y;
  const __int128 ad2 = adx * adx + ady * ady;
  const __int128 bd2 = bdx * bdx + bdy * bdy;
  const __int128 cd2 = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) +
         ad2 * (bdx * cdy - cdx * bdy);
}

struct Tri {
  int v[3] = {-1, -1, -1};
  int n[3] = {-1, -1, -1};  // neighbor across the edge opposite v[i]
  bool alive = false;
};

class BowyerWatson {
 public:
  explicit BowyerWatson(const std::vector<GridPoint>& pts) : pts_(pts) {}

  // Triangulates pts_[0..n_real) inside an auxiliary box appended to pts_.
  std::vector<std::array<int, 3>> run(int n_real) {
    seed_box(n_real);
    for (int i = 0; i < n_real; ++i) insert(i);
    std::vector<std::array<int, 3>> out;
    for (const Tri& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n_real || t.v[1] >= n_real || t.v[2] >= n_real) continue;
      out.push_back({t.v[0], t.v[1], t.v[2]});
    }
    return out;
  }

 private:
  void seed_box(int n_real) {
    // Auxiliary corners were appended as indices n_real .. n_real+3 in the
    // order (min,min), (max,min), (max,max), (min,max); both seed triangles
    // oriented positively.
    const int a = n_real, b = n_real + 1, c = n_real + 2, d = n_real + 3;
    make_tri(a, b, c);
    make_tri(a, c, d);
    tris_[0].n[0] = -1;  // across (b, c)
    tris_[0].n[1] = 1;   // across (c, a) -> shared with tri 1 edge (a, c)
    tris_[0].n[2] = -1;
    tris_[1].n[0] = -1;
    tris_[1].n[1] = -1;
    tris_[1].n[2] = 0;  // across (a, c)
    last_ = 0;
  }

  int make_tri(int a, int b, int c) {
    Tri t;
    t.v[0] = a;
    t.v[1] = b;
    t.v[2] = c;
    t.alive = true;
    tris_.push_back(t);
    return static_cast<int>(tris_.size()) - 1;
  }

  // Visibility walk from the last touched triangle: step through any edge
  // the point lies strictly to the right of. Terminates because the
  // triangulation is Delaunay at all times and the predicates are exact.
  int locate(const GridPoint& p) const {
    int cur = last_;
    for (size_t guard = 0; guard <= 4 * tris_.size() + 16; ++guard) {
      const Tri& t = tris_[cur];
      int next = -1;
      for (int e = 0; e < 3; ++e) {
        if (orient(pts_[t.v[(e + 1) % 3]], pts_[t.v[(e + 2) % 3]], p) < 0 &&
            t.n[e] >= 0) {
          next = t.n[e];
          break;
        }
      }
      if (next < 0) return cur;  // inside or on this triangle's boundary
      cur = next;
    }
    throw StitchError(ErrorKind::DegenerateInput,
                      "point location failed (corrupt triangulation)");
  }

  void insert(int pi) {
    const GridPoint& p = pts_[pi];
    const int start = locate(p);

    // Grow the cavity: all triangles whose circumcircle strictly contains p.
    cavity_.clear();
    in_cavity_.assign(tris_.size(), 0);
    stack_.clear();
    stack_.push_back(start);
    in_cavity_[start] = 1;
    while (!stack_.empty()) {
      const int ti = stack_.back();
      stack_.pop_back();
      cavity_.push_back(ti);
      for (int e = 0; e < 3; ++e) {
        const int nb = tris_[ti].n[e];
        if (nb < 0 || in_cavity_[nb]) continue;
        const Tri& t = tris_[nb];
        if (in_circle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p) > 0) {
          in_cavity_[nb] = 1;
          stack_.push_back(nb);
        }
      }
    }

    // Boundary edges of the cavity, each with the surviving outer neighbor.
    boundary_.clear();
    for (const int ti : cavity_) {
      const Tri& t = tris_[ti];
      for (int e = 0; e < 3; ++e) {
        const int nb = t.n[e];
        if (nb >= 0 && in_cavity_[nb]) continue;
        boundary_.push_back({t.v[(e + 1) % 3], t.v[(e + 2) % 3], nb});
      }
    }
    for (const int ti : cavity_) tris_[ti].alive = false;

    // Fan the cavity from p. Edges (p, x) are shared between consecutive fan
    // triangles; link them through a map keyed by the far vertex.
    fan_link_.clear();
    for (const auto& be : boundary_) {
      const int nt = make_tri(pi, be.a, be.b);
      in_cavity_.push_back(0);
      tris_[nt].n[0] = be.outer;  // across (a, b)
      if (be.outer >= 0) {
        Tri& outer = tris_[be.outer];
        for (int e = 0; e < 3; ++e) {
          const int oa = outer.v[(e + 1) % 3], ob = outer.v[(e + 2) % 3];
          if ((oa == be.a && ob == be.b) || (oa == be.b && ob == be.a))
            outer.n[e] = nt;
        }
      }
      // Internal edge (p, a) is opposite v[2]=b; (p, b) opposite v[1]=a.
      link_fan(be.a, nt, 2);
      link_fan(be.b, nt, 1);
      last_ = nt;
    }
  }

  void link_fan(int far_vertex, int tri, int edge_slot) {
    auto it = fan_link_.find(far_vertex);
    if (it == fan_link_.end()) {
      fan_link_[far_vertex] = {tri, edge_slot};
    } else {
      tris_[tri].n[edge_slot] = it->second.first;
      tris_[it->second.first].n[it->second.second] = tri;
    }
  }

  struct BoundaryEdge {
    int a, b, outer;
  };

  const std::vector<GridPoint>& pts_;
  std::vector<Tri> tris_;
  std::vector<int> cavity_;
  std::vector<char> in_cavity_;
  std::vector<int> stack_;
  std::unordered_map<int, std::pair<int, int>> fan_link_;
  std::vector<BoundaryEdge> boundary_;
  int last_ = 0;
};

GridPoint snap(const ImagePoint& p) {
  return {static_cast<int64_t>(std::llround(p.x() * kGrid)),
          static_cast<int64_t>(std::llround(p.y() * kGrid))};
}

}  // namespace

VertexSet build_vertex_set(int width, int height,
                           const std::vector<std::vector<ImagePoint>>& polygons,
                           const std::vector<ImagePoint>& feature_points,
                           const std::vector<int>& feature_match_indices,
                           double border_step) {
  if (width < 1 || height < 1)
    throw StitchError(ErrorKind::InvalidParam, "empty image");
  if (!(border_step > 0.0))
    throw StitchError(ErrorKind::InvalidParam, "border_step must be > 0");
  if (feature_match_indices.size() != feature_points.size())
    throw StitchError(ErrorKind::InvalidParam,
                      "feature points and match indices must align");

  const double x0 = -0.5, y0 = -0.5;
  const double x1 = width - 0.5, y1 = height - 0.5;
  VertexSet set;
  auto add = [&set](const ImagePoint& p, VertexKind kind, int match_index) {
    for (MeshVertex& existing : set.vertices) {
      if ((existing.position - p).norm() < 0.5) {
        if (match_index >= 0 && existing.match_index < 0)
          existing.match_index = match_index;
        return;
      }
    }
    set.vertices.push_back({p, kind, match_index});
  };

  add({x0, y0}, VertexKind::Corner, -1);
  add({x1, y0}, VertexKind::Corner, -1);
  add({x1, y1}, VertexKind::Corner, -1);
  add({x0, y1}, VertexKind::Corner, -1);
  for (double x = x0 + border_step; x < x1 - 1e-9; x += border_step) {
    add({x, y0}, VertexKind::Border, -1);
    add({x, y1}, VertexKind::Border, -1);
  }
  for (double y = y0 + border_step; y < y1 - 1e-9; y += border_step) {
    add({x0, y}, VertexKind::Border, -1);
    add({x1, y}, VertexKind::Border, -1);
  }
  auto clamp_rect = [&](const ImagePoint& p) {
    return ImagePoint(std::clamp(p.x(), x0, x1), std::clamp(p.y(), y0, y1));
  };
  for (const auto& polygon : polygons)
    for (const ImagePoint& p : polygon)
      add(clamp_rect(p), VertexKind::Polygon, -1);
  for (size_t i = 0; i < feature_points.size(); ++i)
    add(clamp_rect(feature_points[i]), VertexKind::Feature,
        feature_match_indices[i]);
  return set;
}

TriangleMesh delaunay(const VertexSet& vertices) {
  TriangleMesh mesh;
  std::vector<GridPoint> pts;
  pts.reserve(vertices.vertices.size() + 4);
  for (const MeshVertex& v : vertices.vertices) {
    if (!v.position.allFinite())
      throw StitchError(ErrorKind::InvalidParam, "non-finite vertex");
    GridPoint g = snap(v.position);
    pts.push_back(g);
    MeshVertex snapped = v;
    snapped.position = ImagePoint(g.x / kGrid, g.y / kGrid);
    mesh.vertices.push_back(snapped);
  }
  const int n_real = static_cast<int>(pts.size());
  if (n_real < 3)
    throw StitchError(ErrorKind::DegenerateInput,
                      "need at least 3 distinct vertices");

  int64_t minx = std::numeric_limits<int64_t>::max(), maxx = -minx;
  int64_t miny = minx, maxy = maxx;
  for (const GridPoint& g : pts) {
    minx = std::min(minx, g.x);
    maxx = std::max(maxx, g.x);
    miny = std::min(miny, g.y);
    maxy = std::max(maxy, g.y);
  }
  const int64_t span = std::max<int64_t>(
      {maxx - minx, maxy - miny, static_cast<int64_t>(kGrid)});
  const int64_t margin = 8 * span + 65536;
  if (std::max(std::abs(minx - margin), std::abs(maxx + margin)) > kCoordLimit ||
      std::max(std::abs(miny - margin), std::abs(maxy + margin)) > kCoordLimit)
    throw StitchError(ErrorKind::InvalidParam,
                      "vertex span too large for exact triangulation");
  pts.push_back({minx - margin, miny - margin});
  pts.push_back({maxx + margin, miny - margin});
  pts.push_back({maxx + margin, maxy + margin});
  pts.push_back({minx - margin, maxy + margin});

  BowyerWatson bw(pts);
  std::vector<std::array<int, 3>> tris = bw.run(n_real);
  if (tris.empty())
    throw StitchError(ErrorKind::DegenerateInput, "all vertices collinear");
  // Normalize orientation to positive signed area.
  for (auto& t : tris) {
    if (orient(pts[t[0]], pts[t[1]], pts[t[2]]) < 0) std::swap(t[1], t[2]);
  }
  mesh.triangles = std::move(tris);
  return mesh;
}

double triangle_signed_area(const TriangleMesh& mesh, int t) {
  const ImagePoint& a = mesh.vertices[mesh.triangles[t][0]].position;
  const ImagePoint& b = mesh.vertices[mesh.triangles[t][1]].position;
  const ImagePoint& c = mesh.vertices[mesh.triangles[t][2]].position;
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                (b.y() - a.y()) * (c.x() - a.x()));
}

}  // namespace depthstitch
