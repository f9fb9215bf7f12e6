#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "common.hpp"
#include "depthstitch/io.hpp"
#include "depthstitch/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Compare the depth-based fitter against homography baselines over a "
      "threshold sweep"};
  std::string fixture;
  std::string matches_path, depth_path, out_path;
  uint64_t seed = 0;
  std::vector<double> thresholds = {1.0, 2.0, 3.0, 5.0};

  app.add_option("--fixture", fixture,
                 "Built-in match set: two-plane-bench or three-plane-bench");
  app.add_option("--matches", matches_path,
                 "Correspondences (JSONL), as an alternative to --fixture");
  app.add_option("--depth", depth_path,
                 "Metric depth map (PFM) for the loaded matches");
  app.add_option("--out", out_path, "Also write the CSV here");
  app.add_option("--seed", seed, "PRNG seed");
  app.add_option("--thresholds", thresholds, "Inlier thresholds in pixels")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  try {
    depthstitch::MatchSet matches;
    std::string label;
    if (!fixture.empty()) {
      if (!matches_path.empty() || !depth_path.empty())
        throw depthstitch::StitchError(
            depthstitch::ErrorKind::InvalidParam,
            "[load] pass either --fixture or --matches/--depth, not both");
      label = fixture;
      matches = tool::stage("load", [&] {
        return depthstitch::make_bench_matches(fixture, seed);
      });
    } else {
      if (matches_path.empty() || depth_path.empty())
        throw depthstitch::StitchError(
            depthstitch::ErrorKind::InvalidParam,
            "[load] need --fixture, or both --matches and --depth");
      label = "custom";
      matches.records = tool::stage("load", [&] {
        const depthstitch::DepthMap depth = depthstitch::depth_from_metric(
            depthstitch::read_pfm(depth_path));
        return depthstitch::load_matches_jsonl(matches_path, depth).records;
      });
    }

    const std::vector<depthstitch::BenchRow> rows =
        depthstitch::run_bench(matches, label, seed, thresholds);
    const std::string csv = depthstitch::bench_csv(rows);
    std::fputs(csv.c_str(), stdout);
    if (!out_path.empty()) {
      std::ofstream out(out_path);
      if (!out)
        throw depthstitch::StitchError(depthstitch::ErrorKind::IoError,
                                       "[write] cannot open " + out_path);
      out << csv;
    }
  } catch (const std::exception& e) {
    return tool::report_failure("bench", e);
  }
  return 0;
}
