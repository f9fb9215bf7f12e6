#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "common.hpp"
#include "depthstitch/io.hpp"
#include "depthstitch/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Run the pipeline variant ladder (global homography up to the full "
      "depth warp) over one input pair"};
  std::string fixture;
  std::string target_path, reference_path, depth_path, matches_path, out_path;
  depthstitch::MatchSamplingParams sampling;
  sampling.count = 240;
  sampling.noise_sigma = 0.5;
  sampling.outlier_fraction = 0.25;
  depthstitch::PipelineConfig config;
  // Synthetic depth is clean and piecewise planar; mild spatial pull and a
  // tight simplification tolerance track its discontinuities much better
  // than the photo-oriented defaults.
  config.compactness = 1.0;
  config.rdp_epsilon = 1.0;

  app.add_option("--fixture", fixture,
                 "Built-in scene: one-plane, two-plane or three-plane");
  app.add_option("--target", target_path, "Target image (PNG)");
  app.add_option("--reference", reference_path, "Reference image (PNG)");
  app.add_option("--depth", depth_path, "Target metric depth map (PFM)");
  app.add_option("--matches", matches_path, "Correspondences (JSONL)");
  app.add_option("--out", out_path, "Also write the CSV here");
  app.add_option("--seed", config.seed, "PRNG seed");
  app.add_option("--sigma", sampling.noise_sigma,
                 "Fixture match noise in pixels");
  app.add_option("--count", sampling.count, "Fixture correspondence count");
  app.add_option("--outliers", sampling.outlier_fraction,
                 "Fixture outlier fraction");
  app.add_option("--threshold", config.threshold,
                 "RANSAC inlier threshold in pixels");
  app.add_option("--superpixels", config.superpixels, "Superpixel count");
  app.add_option("--compactness", config.compactness,
                 "Superpixel spatial compactness");
  app.add_option("--rdp", config.rdp_epsilon,
                 "Contour simplification tolerance in pixels");
  CLI11_PARSE(app, argc, argv);

  try {
    depthstitch::StitchInputs inputs;
    if (!fixture.empty()) {
      inputs = tool::stage("load", [&] {
        sampling.seed = config.seed;
        return depthstitch::make_synthetic_inputs(
            depthstitch::fixture_by_name(fixture, config.seed), sampling);
      });
    } else {
      if (target_path.empty() || reference_path.empty() ||
          depth_path.empty() || matches_path.empty())
        throw depthstitch::StitchError(
            depthstitch::ErrorKind::InvalidParam,
            "[load] need --fixture, or all of --target/--reference/--depth/"
            "--matches");
      tool::stage("load", [&] {
        inputs.target = depthstitch::read_png(target_path);
        inputs.reference = depthstitch::read_png(reference_path);
        inputs.depth = depthstitch::depth_from_metric(
            depthstitch::read_pfm(depth_path));
        depthstitch::MatchLoad matches =
            depthstitch::load_matches_jsonl(matches_path, inputs.depth);
        inputs.matches = std::move(matches.records);
        inputs.dropped_matches = matches.dropped;
      });
    }

    const std::vector<depthstitch::AblateRow> rows =
        depthstitch::run_ablate(inputs, config);
    const std::string csv = depthstitch::ablate_csv(rows);
    std::fputs(csv.c_str(), stdout);
    if (!out_path.empty()) {
      std::ofstream out(out_path);
      if (!out)
        throw depthstitch::StitchError(depthstitch::ErrorKind::IoError,
                                       "[write] cannot open " + out_path);
      out << csv;
    }
  } catch (const std::exception& e) {
    return tool::report_failure("ablate", e);
  }
  return 0;
}
