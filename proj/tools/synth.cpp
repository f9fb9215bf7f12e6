#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "common.hpp"
#include "depthstitch/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Render a synthetic two-view fixture with exact ground truth"};
  std::string scene = "two-plane";
  std::string out_dir;
  depthstitch::MatchSamplingParams sampling;
  sampling.count = 240;
  sampling.noise_sigma = 0.5;
  sampling.outlier_fraction = 0.25;

  app.add_option("--scene", scene,
                 "Scene name: one-plane, two-plane or three-plane");
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--matches", sampling.count, "Correspondences to sample");
  app.add_option("--sigma", sampling.noise_sigma,
                 "Total match noise in pixels (split across both views)");
  app.add_option("--outliers", sampling.outlier_fraction,
                 "Fraction of matches turned into gross outliers");
  app.add_option("--seed", sampling.seed, "PRNG seed (textures and sampling)");
  CLI11_PARSE(app, argc, argv);

  try {
    tool::stage("write", [&] {
      depthstitch::write_synthetic_fixture(out_dir, scene, sampling);
    });
    std::printf("%s: scene=%s matches=%d sigma=%g outliers=%g\n",
                out_dir.c_str(), scene.c_str(), sampling.count,
                sampling.noise_sigma, sampling.outlier_fraction);
  } catch (const std::exception& e) {
    return tool::report_failure("synth", e);
  }
  return 0;
}
