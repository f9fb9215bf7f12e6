#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "common.hpp"
#include "depthstitch/io.hpp"
#include "depthstitch/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stitch two views of a scene using the target's depth map"};
  std::string target_path, reference_path, depth_path, matches_path, out_dir;
  depthstitch::PipelineConfig config;
  bool no_inpaint = false;
  bool metrics = false;

  app.add_option("--target", target_path, "Target image (PNG)")->required();
  app.add_option("--reference", reference_path, "Reference image (PNG)")
      ->required();
  app.add_option("--depth", depth_path,
                 "Target metric depth map (PFM, or 16-bit grayscale PNG with "
                 "--depth-unit)")
      ->required();
  app.add_option("--matches", matches_path, "Correspondences (JSONL)")
      ->required();
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--threshold", config.threshold,
                 "RANSAC inlier threshold in pixels");
  app.add_option("--eta-scale", config.eta_scale,
                 "Depth clustering shortcut, as a fraction of the robust "
                 "inverse-depth range");
  app.add_option("--beta-scale", config.beta_scale,
                 "Per-class clustering penalty, as a fraction of eta");
  app.add_option("--superpixels", config.superpixels,
                 "Superpixel count for the depth segmentation");
  app.add_option("--compactness", config.compactness,
                 "Superpixel spatial compactness");
  app.add_option("--rdp", config.rdp_epsilon,
                 "Contour simplification tolerance in pixels");
  app.add_option("--border-step", config.border_step,
                 "Mesh vertex spacing along the image border in pixels");
  app.add_flag("--no-inpaint", no_inpaint, "Leave stitching holes unfilled");
  app.add_option("--depth-unit", config.depth_unit,
                 "Meters per count for 16-bit PNG depth maps");
  app.add_option("--seed", config.seed, "PRNG seed");
  app.add_flag("--metrics", metrics,
               "Evaluate PSNR / MS-SSIM over the overlap and add them to the "
               "report");
  CLI11_PARSE(app, argc, argv);
  config.inpaint = !no_inpaint;
  config.collect_metrics = metrics;

  try {
    depthstitch::StitchInputs inputs;
    tool::stage("load", [&] {
      inputs = depthstitch::load_inputs(target_path, reference_path,
                                        depth_path, matches_path,
                                        config.depth_unit);
    });
    const depthstitch::StitchOutputs outputs =
        depthstitch::run_stitch(inputs, config);
    tool::stage("write", [&] {
      depthstitch::write_stitch_outputs(out_dir, inputs, config, outputs);
    });
    std::printf("%s: inliers=%d/%d holes=%d->%d canvas=%dx%d\n",
                out_dir.c_str(), static_cast<int>(outputs.fit.inliers.size()),
                static_cast<int>(inputs.matches.size()),
                outputs.composed.hole_count_before,
                outputs.composed.hole_count_after, outputs.canvas.width,
                outputs.canvas.height);
  } catch (const std::exception& e) {
    return tool::report_failure("stitch", e);
  }
  return 0;
}
