#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthstitch/compose.hpp"
#include "depthstitch/geometry.hpp"
#include "depthstitch/image.hpp"
#include "depthstitch/mesh.hpp"
#include "depthstitch/rectify.hpp"
#include "depthstitch/render.hpp"
#include "depthstitch/robust.hpp"
#include "depthstitch/segmentation.hpp"
#include "depthstitch/synth.hpp"

namespace depthstitch {

enum class FitterKind { Depth, Homography };
const char* to_string(FitterKind kind);

struct PipelineConfig {
  double threshold = 3.0;    // RANSAC inlier gate, reference-side pixels
  double eta_scale = 0.05;   // eta = eta_scale * robust inverse-depth range
  double beta_scale = 0.5;   // beta = beta_scale * eta
  int superpixels = 400;
  double compactness = 10.0;
  double rdp_epsilon = 2.0;  // contour simplification tolerance, px
  int border_step = 32;      // mesh points along the image border, px
  bool inpaint = true;
  double depth_unit = 0.0;   // meters per quantized-PNG depth count;
                             // required (> 0) when the depth map is a PNG
  uint64_t seed = 0;
  FitterKind fitter = FitterKind::Depth;
  bool use_plane_fit = true;
  bool use_feature_depths = true;
  bool use_clustering = true;
  bool collect_metrics = false;
};

// JSON round-trip, for reports and reproducibility checks.
std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const std::string& text);

struct StitchInputs {
  ImageU8 target;
  ImageU8 reference;
  DepthMap depth;  // target-frame inverse depth
  std::vector<MatchRecord> matches;
  int dropped_matches = 0;  // matches without a usable depth sample
};

// Load the stitch inputs from disk. The depth map is either a PFM of metric
// depths or a 16-bit grayscale PNG of quantized depths, selected by file
// extension; the PNG form requires depth_unit > 0 (meters per count). Throws
// DimensionMismatch when the depth map and target image sizes disagree.
StitchInputs load_inputs(const std::string& target_path,
                         const std::string& reference_path,
                         const std::string& depth_path,
                         const std::string& matches_path,
                         double depth_unit = 0.0);

struct StageTiming {
  std::string name;
  double ms = 0.0;
};

struct StitchOutputs {
  FitResult fit;
  int corrected_inexact = 0;        // matches fixed with the fallback step
  int feature_depth_failures = 0;   // features whose depth could not be solved
  SegmentLabelMap segments;
  TriangleMesh mesh;
  LocalWarpSet warps;
  CanvasSpec canvas;
  WarpRender warped;
  ComposeResult composed;
  // Only with collect_metrics: warped target vs. reference over their overlap.
  double psnr_overlap = 0.0;
  double ms_ssim_overlap = 0.0;
  std::vector<StageTiming> timings;
};

// The full stitch: fit, correct, segment, mesh, finalize, render, compose.
// Errors surface as StitchError with a "[stage]" prefix on the message.
StitchOutputs run_stitch(const StitchInputs& inputs,
                         const PipelineConfig& config);

// Key=value report; everything after the "[timings]" line varies run to run,
// everything before it is deterministic for fixed inputs and config.
std::string render_report(const StitchInputs& inputs,
                          const PipelineConfig& config,
                          const StitchOutputs& outputs);

// mosaic.png, warped.png, masks, report.txt under `dir` (which must exist).
void write_stitch_outputs(const std::string& dir, const StitchInputs& inputs,
                          const PipelineConfig& config,
                          const StitchOutputs& outputs);

// Named synthetic scene ("one-plane", "two-plane", "three-plane") rendered
// into ready-to-stitch inputs; the texture seed follows sampling.seed.
SyntheticFixture fixture_by_name(const std::string& name, uint64_t texture_seed);
StitchInputs make_synthetic_inputs(const SyntheticFixture& fixture,
                                   const MatchSamplingParams& sampling);

// Match sets with known plane populations for the fitter shootout
// ("two-plane-bench", "three-plane-bench"); the three-plane set also carries
// a few depth-corrupted records that only a depth-aware fitter can reject.
MatchSet make_bench_matches(const std::string& name, uint64_t seed);

struct BenchRow {
  std::string fixture;
  std::string method;  // depth | homography | multi
  double threshold = 0.0;
  int inlier_count = 0;
  double mean_mapping_error = 0.0;
  double elapsed_ms = 0.0;
};

// Every fitter at every threshold over one match set.
std::vector<BenchRow> run_bench(const MatchSet& matches,
                                const std::string& label, uint64_t seed,
                                const std::vector<double>& thresholds);
std::string bench_csv(const std::vector<BenchRow>& rows);

struct AblateRow {
  std::string name;
  int inliers = 0;
  int split_vertices = 0;
  int holes_before = 0;
  double psnr_overlap = 0.0;
  double ms_ssim_overlap = 0.0;
};

// Fixed ladder of pipeline variants over the same inputs, from a single
// global homography up to the full depth pipeline.
std::vector<AblateRow> run_ablate(const StitchInputs& inputs,
                                  const PipelineConfig& base);
std::string ablate_csv(const std::vector<AblateRow>& rows);

// Renders a named fixture to disk: target.png, reference.png, depth.pfm
// (metric depth), matches.jsonl and truth.json (exact model + inlier labels).
void write_synthetic_fixture(const std::string& dir, const std::string& scene,
                             const MatchSamplingParams& sampling);

}  // namespace depthstitch
