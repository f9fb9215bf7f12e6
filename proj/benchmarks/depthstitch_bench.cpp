#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "depthstitch/mesh.hpp"
#include "depthstitch/metrics.hpp"
#include "depthstitch/pipeline.hpp"
#include "depthstitch/rectify.hpp"
#include "depthstitch/render.hpp"
#include "depthstitch/rng.hpp"
#include "depthstitch/robust.hpp"
#include "depthstitch/segmentation.hpp"
#include "depthstitch/synth.hpp"

namespace {

using namespace depthstitch;

const SyntheticFixture& bench_fixture() {
  static const SyntheticFixture fixture = make_two_plane_fixture(1);
  return fixture;
}

const RenderedView& bench_target_view() {
  static const RenderedView view =
      render_scene(bench_fixture(), CameraPose{}, bench_fixture().k_target);
  return view;
}

MatchSet bench_matches(int count, double noise_sigma, double outlier_fraction) {
  MatchSamplingParams params;
  params.count = count;
  params.noise_sigma = noise_sigma;
  params.outlier_fraction = outlier_fraction;
  params.seed = 7;
  return sample_matches(bench_fixture(), params);
}

void BM_SolveLinear(benchmark::State& state) {
  const MatchSet set = bench_matches(static_cast<int>(state.range(0)), 0.0,
                                     0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_linear_he(set.records));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveLinear)->RangeMultiplier(2)->Range(25, 400)->Complexity();

void BM_EstimateEpipolar(benchmark::State& state) {
  const MatchSet set = bench_matches(200, 0.3, 0.3);
  const RansacConfig config{3.0, 2000, 0.995, 7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_epipolar(set, config));
  }
}
BENCHMARK(BM_EstimateEpipolar)->Unit(benchmark::kMillisecond);

void BM_CorrectMatch(benchmark::State& state) {
  const MatchSet set = bench_matches(64, 1.5, 0.0);
  const EpipolarModel model = ground_truth_model(bench_fixture());
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        correct_match(model, set.records[i++ % set.records.size()]));
  }
}
BENCHMARK(BM_CorrectMatch);

void BM_SlicSegment(benchmark::State& state) {
  const DepthMap& depth = bench_target_view().depth;
  SegmentationParams params;
  params.n_segments = static_cast<int>(state.range(0));
  params.compactness = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(slic_segment(depth, params));
  }
}
BENCHMARK(BM_SlicSegment)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Delaunay(benchmark::State& state) {
  Rng rng(11);
  VertexSet vertices;
  vertices.vertices.resize(static_cast<size_t>(state.range(0)));
  for (MeshVertex& v : vertices.vertices)
    v.position = ImagePoint(rng.uniform(0.0, 640.0), rng.uniform(0.0, 480.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(delaunay(vertices));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Delaunay)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

// The geometry half of a stitch once, then repeated rasterization only.
void BM_RenderWarped(benchmark::State& state) {
  const SyntheticFixture& fixture = bench_fixture();
  const EpipolarModel model = ground_truth_model(fixture);
  const MatchSet set = bench_matches(150, 0.0, 0.0);

  std::vector<ImagePoint> features;
  std::vector<int> feature_indices;
  for (size_t i = 0; i < set.records.size(); ++i) {
    features.push_back(set.records[i].p);
    feature_indices.push_back(static_cast<int>(i));
  }
  const VertexSet vertices = build_vertex_set(
      fixture.width, fixture.height, {}, features, feature_indices, 32.0);
  const TriangleMesh mesh = delaunay(vertices);

  const DepthMap& depth = bench_target_view().depth;
  FinalizeParams fp;
  fp.eta = 0.05 * robust_inv_depth_range(depth);
  fp.beta = 0.5 * fp.eta;
  const std::vector<double> no_feature_depths(
      mesh.vertices.size(), std::numeric_limits<double>::quiet_NaN());
  const LocalWarpSet warps =
      finalize_local_warps(model, mesh, depth, no_feature_depths, fp);
  const CanvasSpec canvas =
      compute_canvas(model, mesh, warps, fixture.width, fixture.height);
  const ImageU8 target = to_u8(bench_target_view().color);

  for (auto _ : state) {
    benchmark::DoNotOptimize(
        render_warped(model, mesh, warps, target, canvas));
  }
  state.counters["canvas_px"] =
      static_cast<double>(canvas.width) * canvas.height;
}
BENCHMARK(BM_RenderWarped)->Unit(benchmark::kMillisecond);

void BM_MsSsim(benchmark::State& state) {
  const ImageU8 a = to_u8(bench_target_view().color);
  ImageU8 b = a;
  Rng rng(3);
  for (uint8_t& v : b.data)
    v = static_cast<uint8_t>(
        std::clamp<long>(std::lround(v + 4.0 * rng.gaussian()), 0, 255));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ms_ssim(a, b, nullptr));
  }
}
BENCHMARK(BM_MsSsim)->Unit(benchmark::kMillisecond);

void BM_RunStitch(benchmark::State& state) {
  MatchSamplingParams sampling;
  sampling.count = 150;
  sampling.noise_sigma = 0.3;
  sampling.seed = 7;
  const StitchInputs inputs = make_synthetic_inputs(bench_fixture(), sampling);
  PipelineConfig config;
  config.superpixels = static_cast<int>(state.range(0));
  config.compactness = 1.0;
  config.rdp_epsilon = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_stitch(inputs, config));
  }
}
BENCHMARK(BM_RunStitch)->Arg(150)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
