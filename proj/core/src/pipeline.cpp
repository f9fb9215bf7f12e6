#include "depthstitch/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "depthstitch/io.hpp"
#include "depthstitch/metrics.hpp"

namespace depthstitch {

const char* to_string(FitterKind kind) {
  return kind == FitterKind::Depth ? "depth" : "homography";
}

std::string config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["threshold"] = c.threshold;
  j["eta_scale"] = c.eta_scale;
  j["beta_scale"] = c.beta_scale;
  j["superpixels"] = c.superpixels;
  j["compactness"] = c.compactness;
  j["rdp_epsilon"] = c.rdp_epsilon;
  j["border_step"] = c.border_step;
  j["inpaint"] = c.inpaint;
  j["depth_unit"] = c.depth_unit;
  j["seed"] = c.seed;
  j["fitter"] = to_string(c.fitter);
  j["use_plane_fit"] = c.use_plane_fit;
  j["use_feature_depths"] = c.use_feature_depths;
  j["use_clustering"] = c.use_clustering;
  j["collect_metrics"] = c.collect_metrics;
  return j.dump();
}

PipelineConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw StitchError(ErrorKind::ParseError, e.what());
  }
  PipelineConfig c;
  try {
    c.threshold = j.value("threshold", c.threshold);
    c.eta_scale = j.value("eta_scale", c.eta_scale);
    c.beta_scale = j.value("beta_scale", c.beta_scale);
    c.superpixels = j.value("superpixels", c.superpixels);
    c.compactness = j.value("compactness", c.compactness);
    c.rdp_epsilon = j.value("rdp_epsilon", c.rdp_epsilon);
    c.border_step = j.value("border_step", c.border_step);
    c.inpaint = j.value("inpaint", c.inpaint);
    c.depth_unit = j.value("depth_unit", c.depth_unit);
    c.seed = j.value("seed", c.seed);
    c.use_plane_fit = j.value("use_plane_fit", c.use_plane_fit);
    c.use_feature_depths = j.value("use_feature_depths", c.use_feature_depths);
    c.use_clustering = j.value("use_clustering", c.use_clustering);
    c.collect_metrics = j.value("collect_metrics", c.collect_metrics);
    const std::string fitter = j.value("fitter", std::string("depth"));
    if (fitter == "depth")
      c.fitter = FitterKind::Depth;
    else if (fitter == "homography")
      c.fitter = FitterKind::Homography;
    else
      throw StitchError(ErrorKind::ParseError, "unknown fitter: " + fitter);
  } catch (const nlohmann::json::exception& e) {
    throw StitchError(ErrorKind::ParseError, e.what());
  }
  return c;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

template <typename Fn>
void run_stage(const char* name, std::vector<StageTiming>* timings, Fn&& fn) {
  const auto start = Clock::now();
  try {
    fn();
  } catch (const StitchError& e) {
    throw StitchError(e.kind(), std::string("[") + name + "] " + e.message());
  } catch (const std::exception& e) {
    throw StitchError(ErrorKind::InvalidParam,
                      std::string("[") + name + "] " + e.what());
  }
  timings->push_back({name, ms_since(start)});
}

double homography_mean_error(const EpipolarModel& model,
                             const std::vector<MatchRecord>& records,
                             const std::vector<int>& indices) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (int i : indices) {
    const Eigen::Vector3d v = model.h_inf * homogeneous(records[i].p);
    sum += (ImagePoint(v.x() / v.z(), v.y() / v.z()) - records[i].q).norm();
  }
  return sum / static_cast<double>(indices.size());
}

ImageU8 place_reference_u8(const ImageU8& reference, const CanvasSpec& canvas) {
  ImageU8 out(canvas.width, canvas.height, reference.channels);
  for (int y = 0; y < canvas.height; ++y)
    for (int x = 0; x < canvas.width; ++x) {
      const int rx = x + canvas.origin_x;
      const int ry = y + canvas.origin_y;
      if (rx < 0 || rx >= reference.width || ry < 0 || ry >= reference.height)
        continue;
      for (int c = 0; c < reference.channels; ++c)
        out.at(x, y, c) = reference.at(rx, ry, c);
    }
  return out;
}

}  // namespace

StitchInputs load_inputs(const std::string& target_path,
                         const std::string& reference_path,
                         const std::string& depth_path,
                         const std::string& matches_path, double depth_unit) {
  StitchInputs inputs;
  inputs.target = read_png(target_path);
  inputs.reference = read_png(reference_path);

  std::string ext = std::filesystem::path(depth_path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == ".pfm") {
    inputs.depth = depth_from_metric(read_pfm(depth_path));
  } else if (ext == ".png") {
    if (!(depth_unit > 0.0))
      throw StitchError(ErrorKind::InvalidParam,
                        "PNG depth maps need depth_unit > 0 (meters per "
                        "count)");
    inputs.depth = depth_from_quantized(read_png16(depth_path), depth_unit);
  } else {
    throw StitchError(ErrorKind::ParseError,
                      depth_path + ": unsupported depth format (expected "
                                   ".pfm or .png)");
  }
  if (inputs.depth.width != inputs.target.width ||
      inputs.depth.height != inputs.target.height)
    throw StitchError(ErrorKind::DimensionMismatch,
                      "depth map must match the target size");

  MatchLoad matches = load_matches_jsonl(matches_path, inputs.depth);
  inputs.matches = std::move(matches.records);
  inputs.dropped_matches = matches.dropped;
  return inputs;
}

StitchOutputs run_stitch(const StitchInputs& inputs,
                         const PipelineConfig& config) {
  if (inputs.target.channels != 3 || inputs.reference.channels != 3)
    throw StitchError(ErrorKind::InvalidParam,
                      "[load] target and reference must be RGB");
  if (inputs.depth.width != inputs.target.width ||
      inputs.depth.height != inputs.target.height)
    throw StitchError(ErrorKind::DimensionMismatch,
                      "[load] depth map must match the target size");

  StitchOutputs out;
  MatchSet matches;
  matches.records = inputs.matches;

  run_stage("fit", &out.timings, [&] {
    const RansacConfig rc{config.threshold, 2000, 0.995, config.seed};
    if (config.fitter == FitterKind::Depth) {
      out.fit = estimate_epipolar(matches, rc);
    } else {
      const BaselineReport report =
          baseline_fit(matches, rc, BaselineKind::HomographyRansac);
      out.fit.model.h_inf = fit_homography(matches.records, report.inliers);
      out.fit.model.epipole = Eigen::Vector3d::Zero();
      out.fit.inliers = report.inliers;
      out.fit.mean_mapping_error =
          homography_mean_error(out.fit.model, matches.records, report.inliers);
      out.fit.iterations = 0;
    }
  });

  // Feature vertices carry the corrected target positions; their rectified
  // depths are looked up per match index when the mesh is finalized.
  std::vector<ImagePoint> feature_points;
  std::vector<int> feature_match_indices;
  std::vector<double> match_feature_depth(matches.records.size(),
                                          std::numeric_limits<double>::quiet_NaN());
  run_stage("correct", &out.timings, [&] {
    feature_points.reserve(out.fit.inliers.size());
    feature_match_indices.reserve(out.fit.inliers.size());
    for (int idx : out.fit.inliers) {
      ImagePoint position = matches.records[idx].p;
      if (config.fitter == FitterKind::Depth) {
        const CorrectedMatch corrected =
            correct_match(out.fit.model, matches.records[idx]);
        if (!corrected.exact) ++out.corrected_inexact;
        position = corrected.p;
        if (config.use_feature_depths) {
          try {
            match_feature_depth[idx] =
                rectify_feature_depth(out.fit.model, corrected);
          } catch (const StitchError&) {
            ++out.feature_depth_failures;
          }
        }
      }
      feature_points.push_back(position);
      feature_match_indices.push_back(idx);
    }
  });

  std::vector<std::vector<ImagePoint>> polygons;
  run_stage("segment", &out.timings, [&] {
    SegmentationParams sp;
    sp.n_segments = config.superpixels;
    sp.compactness = config.compactness;
    out.segments = slic_segment(inputs.depth, sp);
    polygons = extract_segment_polygons(out.segments, config.rdp_epsilon);
  });

  run_stage("mesh", &out.timings, [&] {
    const VertexSet vertices = build_vertex_set(
        inputs.target.width, inputs.target.height, polygons, feature_points,
        feature_match_indices, config.border_step);
    out.mesh = delaunay(vertices);
  });

  run_stage("finalize", &out.timings, [&] {
    FinalizeParams fp;
    fp.use_plane_fit = config.use_plane_fit;
    fp.use_feature_depths = config.use_feature_depths;
    fp.use_clustering = config.use_clustering;
    if (config.use_clustering) {
      const double range = robust_inv_depth_range(inputs.depth);
      fp.eta = config.eta_scale * range;
      fp.beta = config.beta_scale * fp.eta;
    }
    std::vector<double> feature_inv_depth(
        out.mesh.vertices.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t v = 0; v < out.mesh.vertices.size(); ++v) {
      const MeshVertex& vert = out.mesh.vertices[v];
      if (vert.kind == VertexKind::Feature && vert.match_index >= 0)
        feature_inv_depth[v] = match_feature_depth[vert.match_index];
    }
    out.warps = finalize_local_warps(out.fit.model, out.mesh, inputs.depth,
                                     feature_inv_depth, fp);
  });

  run_stage("render", &out.timings, [&] {
    out.canvas = compute_canvas(out.fit.model, out.mesh, out.warps,
                                inputs.reference.width,
                                inputs.reference.height);
    out.warped = render_warped(out.fit.model, out.mesh, out.warps,
                               inputs.target, out.canvas);
  });

  run_stage("compose", &out.timings, [&] {
    ComposeParams cp;
    cp.inpaint = config.inpaint;
    out.composed = compose_mosaic(out.warped, inputs.reference, out.canvas, cp);
  });

  if (config.collect_metrics) {
    run_stage("metrics", &out.timings, [&] {
      const ImageU8 warped_u8 = to_u8(out.warped.color);
      const ImageU8 reference_u8 =
          place_reference_u8(inputs.reference, out.canvas);
      try {
        out.psnr_overlap =
            psnr(warped_u8, reference_u8, &out.composed.overlap_mask);
        out.ms_ssim_overlap =
            ms_ssim(warped_u8, reference_u8, &out.composed.overlap_mask);
      } catch (const StitchError& e) {
        if (e.kind() != ErrorKind::RegionTooSmall) throw;
        out.psnr_overlap = std::numeric_limits<double>::quiet_NaN();
        out.ms_ssim_overlap = std::numeric_limits<double>::quiet_NaN();
      }
    });
  }
  return out;
}

std::string render_report(const StitchInputs& inputs,
                          const PipelineConfig& config,
                          const StitchOutputs& outputs) {
  std::ostringstream out;
  char line[256];
  auto kv = [&](const char* key, const char* fmt, auto value) {
    std::snprintf(line, sizeof(line), fmt, value);
    out << key << "=" << line << "\n";
  };
  out << "config=" << config_to_json(config) << "\n";
  out << "fitter=" << to_string(config.fitter) << "\n";
  kv("matches", "%d", static_cast<int>(inputs.matches.size()));
  kv("dropped_matches", "%d", inputs.dropped_matches);
  kv("inliers", "%d", static_cast<int>(outputs.fit.inliers.size()));
  kv("mean_mapping_error", "%.17g", outputs.fit.mean_mapping_error);
  kv("ransac_iterations", "%d", outputs.fit.iterations);
  kv("corrected_inexact", "%d", outputs.corrected_inexact);
  kv("feature_depth_failures", "%d", outputs.feature_depth_failures);
  kv("segments", "%d", outputs.segments.segment_count);
  kv("mesh_vertices", "%d", static_cast<int>(outputs.mesh.vertices.size()));
  kv("mesh_triangles", "%d", static_cast<int>(outputs.mesh.triangles.size()));
  kv("split_vertices", "%d", outputs.warps.split_vertex_count);
  kv("plane_fallbacks", "%d", outputs.warps.plane_fallback_count);
  kv("canvas_origin_x", "%d", outputs.canvas.origin_x);
  kv("canvas_origin_y", "%d", outputs.canvas.origin_y);
  kv("canvas_width", "%d", outputs.canvas.width);
  kv("canvas_height", "%d", outputs.canvas.height);
  kv("holes_before", "%d", outputs.composed.hole_count_before);
  kv("holes_after", "%d", outputs.composed.hole_count_after);
  if (config.collect_metrics) {
    kv("psnr_overlap", "%.17g", outputs.psnr_overlap);
    kv("ms_ssim_overlap", "%.17g", outputs.ms_ssim_overlap);
  }
  out << "[timings]\n";
  for (const StageTiming& t : outputs.timings) {
    std::snprintf(line, sizeof(line), "%.3f", t.ms);
    out << t.name << "_ms=" << line << "\n";
  }
  return out.str();
}

void write_stitch_outputs(const std::string& dir, const StitchInputs& inputs,
                          const PipelineConfig& config,
                          const StitchOutputs& outputs) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw StitchError(ErrorKind::IoError, dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  write_png((base / "mosaic.png").string(), outputs.composed.mosaic);
  write_png((base / "warped.png").string(), to_u8(outputs.warped.color));
  write_mask_png((base / "overlap_mask.png").string(),
                 outputs.composed.overlap_mask, outputs.canvas.width,
                 outputs.canvas.height);
  write_mask_png((base / "hole_mask.png").string(), outputs.composed.hole_mask,
                 outputs.canvas.width, outputs.canvas.height);
  std::ofstream report((base / "report.txt").string());
  if (!report)
    throw StitchError(ErrorKind::IoError, dir + ": cannot write report.txt");
  report << render_report(inputs, config, outputs);
}

SyntheticFixture fixture_by_name(const std::string& name,
                                 uint64_t texture_seed) {
  if (name == "one-plane") return make_one_plane_fixture(texture_seed);
  if (name == "two-plane") return make_two_plane_fixture(texture_seed);
  if (name == "three-plane") return make_three_plane_fixture(texture_seed);
  throw StitchError(ErrorKind::InvalidParam,
                    "unknown scene '" + name +
                        "' (expected one-plane, two-plane or three-plane)");
}

StitchInputs make_synthetic_inputs(const SyntheticFixture& fixture,
                                   const MatchSamplingParams& sampling) {
  StitchInputs inputs;
  const RenderedView target = render_scene(fixture, CameraPose{},
                                           fixture.k_target);
  const RenderedView reference =
      render_scene(fixture, fixture.reference, fixture.k_reference);
  inputs.target = to_u8(target.color);
  inputs.reference = to_u8(reference.color);
  inputs.depth = target.depth;
  inputs.matches = sample_matches(fixture, sampling).records;
  return inputs;
}

MatchSet make_bench_matches(const std::string& name, uint64_t seed) {
  MatchSamplingParams params;
  params.noise_sigma = 0.2;
  params.outlier_fraction = 0.0;
  params.seed = seed;
  MatchSet set;
  int corrupt_count = 0;
  if (name == "two-plane-bench") {
    // No depth corruption here: with a single claimable plane the baselines'
    // scored refit collapses to that plane's homography (epipole pushed to
    // zero), which hides any depth inconsistency. This fixture carries the
    // inlier-count comparison; the corrupted three-plane fixture carries the
    // mapping-error one.
    const SyntheticFixture fixture = make_two_plane_fixture(seed);
    params.count = 105;
    set = sample_matches_stratified(fixture, {100, 5}, params);
    corrupt_count = 0;
  } else if (name == "three-plane-bench") {
    const SyntheticFixture fixture = make_three_plane_fixture(seed);
    params.count = 145;
    set = sample_matches_stratified(fixture, {80, 60, 5}, params);
    corrupt_count = 3;
  } else {
    throw StitchError(ErrorKind::InvalidParam,
                      "unknown bench fixture '" + name +
                          "' (expected two-plane-bench or three-plane-bench)");
  }
  // A few records whose image positions stay perfectly consistent but whose
  // depth readings are badly wrong: invisible to depth-blind fitters, which
  // happily count them as inliers, while the depth fitter rejects them.
  // Corrupt the nearest records so the sub-minimal far patch, which carries
  // the depth fitter's inlier-count edge over plane-claiming baselines, stays
  // clean.
  std::vector<size_t> order(set.records.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&set](size_t a, size_t b) {
    return set.records[a].inv_depth > set.records[b].inv_depth;
  });
  order.resize(static_cast<size_t>(corrupt_count));
  corrupt_match_depths(set, order, 4.0);
  return set;
}

std::vector<BenchRow> run_bench(const MatchSet& matches,
                                const std::string& label, uint64_t seed,
                                const std::vector<double>& thresholds) {
  std::vector<BenchRow> rows;
  for (double threshold : thresholds) {
    const RansacConfig rc{threshold, 2000, 0.995, seed};
    {
      BenchRow row{label, "depth", threshold, 0,
                   std::numeric_limits<double>::quiet_NaN(), 0.0};
      const auto start = Clock::now();
      try {
        const FitResult fit = estimate_epipolar(matches, rc);
        row.inlier_count = static_cast<int>(fit.inliers.size());
        row.mean_mapping_error = fit.mean_mapping_error;
      } catch (const StitchError&) {
      }
      row.elapsed_ms = ms_since(start);
      rows.push_back(row);
    }
    const std::pair<const char*, BaselineKind> baselines[] = {
        {"homography", BaselineKind::HomographyRansac},
        {"multi", BaselineKind::MultiSamplingRansac}};
    for (const auto& [method, kind] : baselines) {
      BenchRow row{label, method, threshold, 0,
                   std::numeric_limits<double>::quiet_NaN(), 0.0};
      const auto start = Clock::now();
      try {
        const BaselineReport report = baseline_fit(matches, rc, kind);
        row.inlier_count = static_cast<int>(report.inliers.size());
        row.mean_mapping_error = report.mean_mapping_error;
      } catch (const StitchError&) {
      }
      row.elapsed_ms = ms_since(start);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "fixture,method,threshold,inlier_count,mean_mapping_error,elapsed_ms\n";
  char line[256];
  for (const BenchRow& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%s,%.6g,%d,%.6g,%.3f\n",
                  r.fixture.c_str(), r.method.c_str(), r.threshold,
                  r.inlier_count, r.mean_mapping_error, r.elapsed_ms);
    out << line;
  }
  return out.str();
}

std::vector<AblateRow> run_ablate(const StitchInputs& inputs,
                                  const PipelineConfig& base) {
  struct Variant {
    const char* name;
    FitterKind fitter;
    bool plane, feature, cluster;
  };
  // A ladder from a single global homography to the full pipeline; each step
  // turns on one ingredient of the depth-based warp.
  const Variant variants[] = {
      {"homography", FitterKind::Homography, false, false, false},
      {"depth-nearest", FitterKind::Depth, false, false, false},
      {"depth-plane", FitterKind::Depth, true, false, false},
      {"depth-plane-cluster", FitterKind::Depth, true, false, true},
      {"depth-feature", FitterKind::Depth, false, true, true},
      {"full", FitterKind::Depth, true, true, true},
  };
  std::vector<AblateRow> rows;
  for (const Variant& v : variants) {
    PipelineConfig config = base;
    config.fitter = v.fitter;
    config.use_plane_fit = v.plane;
    config.use_feature_depths = v.feature;
    config.use_clustering = v.cluster;
    config.collect_metrics = true;
    AblateRow row;
    row.name = v.name;
    try {
      const StitchOutputs outputs = run_stitch(inputs, config);
      row.inliers = static_cast<int>(outputs.fit.inliers.size());
      row.split_vertices = outputs.warps.split_vertex_count;
      row.holes_before = outputs.composed.hole_count_before;
      row.psnr_overlap = outputs.psnr_overlap;
      row.ms_ssim_overlap = outputs.ms_ssim_overlap;
    } catch (const StitchError&) {
      row.psnr_overlap = std::numeric_limits<double>::quiet_NaN();
      row.ms_ssim_overlap = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string ablate_csv(const std::vector<AblateRow>& rows) {
  std::ostringstream out;
  out << "name,inliers,split_vertices,holes_before,psnr_overlap,ms_ssim_overlap\n";
  char line[256];
  for (const AblateRow& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%.6g,%.6g\n",
                  r.name.c_str(), r.inliers, r.split_vertices, r.holes_before,
                  r.psnr_overlap, r.ms_ssim_overlap);
    out << line;
  }
  return out.str();
}

void write_synthetic_fixture(const std::string& dir, const std::string& scene,
                             const MatchSamplingParams& sampling) {
  const SyntheticFixture fixture = fixture_by_name(scene, sampling.seed);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw StitchError(ErrorKind::IoError, dir + ": " + ec.message());
  const std::filesystem::path base(dir);

  const RenderedView target = render_scene(fixture, CameraPose{},
                                           fixture.k_target);
  const RenderedView reference =
      render_scene(fixture, fixture.reference, fixture.k_reference);
  write_png((base / "target.png").string(), to_u8(target.color));
  write_png((base / "reference.png").string(), to_u8(reference.color));
  write_pfm((base / "depth.pfm").string(), depth_to_metric(target.depth));

  const MatchSet matches = sample_matches(fixture, sampling);
  write_matches_jsonl((base / "matches.jsonl").string(), matches.records);

  const EpipolarModel model = ground_truth_model(fixture);
  nlohmann::json truth;
  truth["scene"] = scene;
  truth["width"] = fixture.width;
  truth["height"] = fixture.height;
  truth["noise_sigma"] = sampling.noise_sigma;
  truth["outlier_fraction"] = sampling.outlier_fraction;
  truth["seed"] = sampling.seed;
  auto mat = [](const Eigen::Matrix3d& m) {
    return std::vector<double>{m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1),
                               m(1, 2), m(2, 0), m(2, 1), m(2, 2)};
  };
  truth["h_inf"] = mat(model.h_inf);
  truth["epipole"] = {model.epipole(0), model.epipole(1), model.epipole(2)};
  truth["k_target"] = mat(fixture.k_target);
  truth["k_reference"] = mat(fixture.k_reference);
  truth["rotation"] = mat(fixture.reference.rotation);
  truth["translation"] = {fixture.reference.translation(0),
                          fixture.reference.translation(1),
                          fixture.reference.translation(2)};
  truth["true_inlier"] = matches.true_inlier;
  std::ofstream out((base / "truth.json").string());
  if (!out)
    throw StitchError(ErrorKind::IoError, dir + ": cannot write truth.json");
  out << truth.dump(2) << "\n";
}

}  // namespace depthstitch
