/*
 * Copyright 2026 The Keylane Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "keylane/data/culane.hpp"
#include "keylane/data/synthetic.hpp"
#include "keylane/data/tusimple.hpp"
#include "keylane/io/image.hpp"
#include "keylane/io/overlay.hpp"
#include "keylane/metrics/culane_metric.hpp"
#include "keylane/metrics/tusimple_metric.hpp"
#include "keylane/net/checkpoint.hpp"
#include "keylane/post/postprocess.hpp"
#include "keylane/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace keylane;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitTrainAbort = 3;
constexpr int kExitNoInput = 4;
constexpr int kExitFrameMismatch = 5;

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".ppm" || ext == ".pgm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

double default_conf_threshold(int n) {
  static constexpr double kPerDepth[4] = {0.52, 0.30, 0.32, 0.35};
  return kPerDepth[std::clamp(n, 1, 4) - 1];
}

int run_train(const std::string& config_path, const std::string& resume) {
  train::TrainConfig cfg;
  try {
    cfg = train::load_train_config(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  }

  std::vector<data::Sample> pool;
  try {
    pool = train::build_pool(cfg);
  } catch (const Error& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitBadConfig;
  }

  net::Model<float> model;
  net::Adam<float> adam;
  adam.lr = cfg.lr;
  int start_epoch = 0;
  if (!resume.empty()) {
    nlohmann::json extra;
    try {
      model = net::load_checkpoint(resume, &extra, &adam);
    } catch (const Error& e) {
      std::cerr << "resume error: " << e.what() << "\n";
      return kExitBadConfig;
    }
    start_epoch = extra.value("epoch", 0);
    adam.lr = extra.value("lr", cfg.lr);
    std::cout << "resuming from " << resume << " at epoch " << start_epoch << "\n";
  } else {
    net::ModelSpec spec;
    spec.n_hourglass = cfg.n_hourglass;
    spec.feature_channels = cfg.feature_channels;
    spec.bottleneck_mid = cfg.bottleneck_mid;
    model.build(spec);
    model.init(cfg.seed);
  }

  try {
    const auto result = train::train(cfg, pool, model, adam,
                                     [](const train::EpochRecord& rec, net::Model<float>&) {
                                       std::cout << "epoch " << rec.epoch
                                                 << " loss " << rec.losses.total;
                                       if (rec.evaluated) {
                                         const auto& v = rec.val.rbegin()->second;
                                         std::cout << " acc " << v.accuracy << " fp " << v.fp_rate;
                                       }
                                       std::cout << "\n";
                                       return true;
                                     },
                                     start_epoch);
    std::cout << "trained " << result.epochs_run << " epochs; checkpoints in " << cfg.out_dir
              << "\n";
  } catch (const train::TrainAbort& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kExitTrainAbort;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  return kExitOk;
}

int run_infer(const std::string& checkpoint, const std::string& image_dir,
              const std::string& out_dir, int n_modules, double conf_threshold,
              double cluster_threshold, bool overlay) {
  net::Model<float> model;
  try {
    model = net::load_checkpoint(checkpoint);
  } catch (const Error& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  const int n = n_modules > 0 ? n_modules : model.n_modules();
  if (n < 1 || n > model.n_modules()) {
    std::cerr << "n-modules " << n << " invalid for a " << model.n_modules()
              << "-module checkpoint\n";
    return kExitBadConfig;
  }

  std::vector<fs::path> images;
  if (fs::is_directory(image_dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(image_dir)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
  } else if (fs::exists(image_dir)) {
    images.push_back(image_dir);
  }

  post::DetectOptions opt;
  opt.conf_threshold = conf_threshold > 0 ? conf_threshold : default_conf_threshold(n);
  opt.cluster_distance = cluster_threshold;

  fs::create_directories(out_dir);
  std::ofstream pred_out(fs::path(out_dir) / "predictions.json");
  if (overlay) fs::create_directories(fs::path(out_dir) / "overlays");

  int done = 0;
  for (const auto& path : images) {
    Image original;
    try {
      original = io::read_image(path.string());
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
      continue;
    }
    const Image input = io::to_input_image(original);
    net::Tensor4<float> x(1, 3, kInputHeight, kInputWidth);
    std::copy(input.data.begin(), input.data.end(), x.sample(0));
    const auto out = model.infer(x, n);
    const auto mo = train::slice_outputs(out, 0);
    const auto lanes = post::detect(mo.grids[n - 1], opt);

    const std::string rel = fs::is_directory(image_dir)
                                ? fs::relative(path, image_dir).string()
                                : path.filename().string();
    pred_out << data::label_record_to_json(data::lanes_to_record(lanes, rel)) << "\n";

    if (overlay) {
      Image canvas = original;
      std::vector<LaneInstance> scaled = lanes;
      const double sx = static_cast<double>(original.width) / kInputWidth;
      const double sy = static_cast<double>(original.height) / kInputHeight;
      for (auto& lane : scaled) {
        for (auto& p : lane.points) {
          p.x *= sx;
          p.y *= sy;
        }
      }
      io::draw_lanes(canvas, scaled);
      fs::path name = fs::path(rel).filename();
      name.replace_extension(".ppm");
      io::write_image((fs::path(out_dir) / "overlays" / name).string(), canvas);
    }
    ++done;
  }
  if (done == 0) {
    std::cerr << "no readable images under " << image_dir << "\n";
    return kExitNoInput;
  }
  std::cout << "wrote predictions for " << done << " images to " << out_dir << "\n";
  return kExitOk;
}

std::vector<metrics::XYSampledFrame> load_xy_frames(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path);
  std::vector<metrics::XYSampledFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto rec = data::parse_label_record(line);
    metrics::XYSampledFrame f;
    f.id = rec.raw_file;
    f.y_samples = rec.h_samples;
    f.lanes = rec.lanes_x;
    frames.push_back(std::move(f));
  }
  return frames;
}

int check_frame_sets(const std::set<std::string>& pred_ids, const std::set<std::string>& gt_ids) {
  std::vector<std::string> missing;
  for (const auto& id : gt_ids) {
    if (!pred_ids.count(id)) missing.push_back("missing prediction: " + id);
  }
  for (const auto& id : pred_ids) {
    if (!gt_ids.count(id)) missing.push_back("missing ground truth: " + id);
  }
  if (!missing.empty()) {
    std::cerr << "frame sets differ (" << missing.size() << " problems)\n";
    for (const auto& m : missing) std::cerr << "  " << m << "\n";
    return kExitFrameMismatch;
  }
  return kExitOk;
}

int run_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& benchmark, const std::string& report_path) {
  std::ofstream report(report_path);
  if (!report) {
    std::cerr << "cannot write report file: " << report_path << "\n";
    return kExitBadConfig;
  }

  try {
    if (benchmark == "tusimple") {
      const auto preds = load_xy_frames(pred_path);
      const auto gts = load_xy_frames(gt_path);
      std::set<std::string> pred_ids, gt_ids;
      for (const auto& f : preds) pred_ids.insert(f.id);
      for (const auto& f : gts) gt_ids.insert(f.id);
      if (int rc = check_frame_sets(pred_ids, gt_ids); rc != kExitOk) return rc;

      const auto rep = metrics::tusimple_score(preds, gts);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "frames %-6ld accuracy %.4f  fp %.4f  fn %.4f\n",
                    rep.frames, rep.accuracy, rep.fp_rate, rep.fn_rate);
      report << buf;
      std::cout << "accuracy " << rep.accuracy << " (fp " << rep.fp_rate << ", fn "
                << rep.fn_rate << ")\n";
      return kExitOk;
    }
    if (benchmark == "culane") {
      auto collect = [](const std::string& root) {
        std::vector<metrics::PolylineFrame> frames;
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
          if (!entry.is_regular_file()) continue;
          const std::string name = entry.path().filename().string();
          if (name.size() < 10 || name.substr(name.size() - 10) != ".lines.txt") continue;
          metrics::PolylineFrame f;
          f.id = fs::relative(entry.path(), root).string();
          const fs::path rel = fs::relative(entry.path(), root);
          f.category = rel.has_parent_path() ? rel.begin()->string() : "all";
          std::ifstream in(entry.path());
          std::string line;
          const double sx = data::kPolylineSourceWidth / kInputWidth;
          const double sy = data::kPolylineSourceHeight / kInputHeight;
          std::stringstream buf;
          buf << in.rdbuf();
          for (const auto& lane : data::parse_polyline_lines(buf.str())) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : lane.points) pts.emplace_back(p.x * sx, p.y * sy);
            f.lanes.push_back(std::move(pts));
          }
          frames.push_back(std::move(f));
        }
        return frames;
      };
      const auto preds = collect(pred_path);
      const auto gts = collect(gt_path);
      std::set<std::string> pred_ids, gt_ids;
      for (const auto& f : preds) pred_ids.insert(f.id);
      for (const auto& f : gts) gt_ids.insert(f.id);
      if (int rc = check_frame_sets(pred_ids, gt_ids); rc != kExitOk) return rc;

      const auto rep = metrics::culane_score(preds, gts);
      char buf[160];
      report << "category      frames-tp    fp      fn      precision  recall   f1\n";
      for (const auto& [name, cat] : rep.categories) {
        std::snprintf(buf, sizeof(buf), "%-12s  %6ld  %6ld  %6ld     %.4f   %.4f   %.4f\n",
                      name.c_str(), cat.tp, cat.fp, cat.fn, cat.precision, cat.recall, cat.f1);
        report << buf;
      }
      std::snprintf(buf, sizeof(buf), "%-12s  %6ld  %6ld  %6ld     %.4f   %.4f   %.4f\n", "total",
                    rep.overall.tp, rep.overall.fp, rep.overall.fn, rep.overall.precision,
                    rep.overall.recall, rep.overall.f1);
      report << buf;
      std::cout << "F1 " << rep.overall.f1 << " (precision " << rep.overall.precision
                << ", recall " << rep.overall.recall << ")\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "eval error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  std::cerr << "unknown benchmark '" << benchmark << "' (expected tusimple or culane)\n";
  return kExitBadConfig;
}

int run_clip(const std::string& in_path, int n, const std::string& out_path) {
  try {
    net::clip_checkpoint(in_path, n, out_path);
  } catch (const Error& e) {
    std::cerr << "clip error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

int run_synth(const std::string& out_dir, int count, std::uint64_t seed, int lane_min,
              int lane_max, double curvature, double noise, double occlusion) {
  data::SyntheticSceneConfig cfg;
  cfg.lane_count_min = lane_min;
  cfg.lane_count_max = lane_max;
  cfg.curvature = curvature;
  cfg.noise = noise;
  cfg.occlusion = occlusion;
  cfg.seed = seed;
  try {
    cfg.validate();
    const auto pool = data::generate_synthetic_pool(cfg, count);
    data::save_dataset(out_dir, pool);
  } catch (const Error& e) {
    std::cerr << "synth error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  std::cout << "wrote " << count << " frames to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keylane: key-point lane detection (train / infer / eval / clip / synth)"};
  app.require_subcommand(1);

  // train
  std::string config_path, resume;
  auto* train_cmd = app.add_subcommand("train", "run the training loop from a config file");
  train_cmd->add_option("config", config_path, "key=value training config")->required();
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");

  // infer
  std::string ckpt, image_dir, out_dir = "out";
  int n_modules = 0;
  double conf_threshold = 0.0, cluster_threshold = 0.08;
  bool overlay = false;
  auto* infer_cmd = app.add_subcommand("infer", "detect lanes in a directory of images");
  infer_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  infer_cmd->add_option("--images", image_dir, "image file or directory")->required();
  infer_cmd->add_option("--out", out_dir, "output directory");
  infer_cmd->add_option("--n-modules", n_modules, "clip depth to run (default: all)");
  infer_cmd->add_option("--conf-threshold", conf_threshold,
                        "confidence threshold (default: per-depth table)");
  infer_cmd->add_option("--cluster-threshold", cluster_threshold, "embedding distance threshold");
  infer_cmd->add_flag("--overlay", overlay, "also write overlay images");

  // eval
  std::string pred_path, gt_path, benchmark = "tusimple", report_path = "report.txt";
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--pred", pred_path, "prediction label file / directory")->required();
  eval_cmd->add_option("--gt", gt_path, "ground-truth label file / directory")->required();
  eval_cmd->add_option("--benchmark", benchmark, "tusimple or culane");
  eval_cmd->add_option("--out", report_path, "report file");

  // clip
  std::string clip_in, clip_out;
  int clip_n = 1;
  auto* clip_cmd = app.add_subcommand("clip", "truncate a checkpoint to its first n modules");
  clip_cmd->add_option("--in", clip_in, "input checkpoint")->required();
  clip_cmd->add_option("--n", clip_n, "modules to keep")->required();
  clip_cmd->add_option("--out", clip_out, "output checkpoint")->required();

  // synth
  std::string synth_out = "synth";
  int synth_count = 32, lane_min = 2, lane_max = 4;
  std::uint64_t seed = 1;
  double curvature = 0.002, noise = 0.0, occlusion = 0.0;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset to disk");
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--count", synth_count, "number of frames");
  synth_cmd->add_option("--seed", seed, "generator seed");
  synth_cmd->add_option("--lane-min", lane_min, "minimum lanes per frame");
  synth_cmd->add_option("--lane-max", lane_max, "maximum lanes per frame");
  synth_cmd->add_option("--curvature", curvature, "maximum quadratic curvature");
  synth_cmd->add_option("--noise", noise, "noise level in [0,1]");
  synth_cmd->add_option("--occlusion", occlusion, "per-lane occluder probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadConfig;
  }

  if (train_cmd->parsed()) return run_train(config_path, resume);
  if (infer_cmd->parsed()) {
    return run_infer(ckpt, image_dir, out_dir, n_modules, conf_threshold, cluster_threshold,
                     overlay);
  }
  if (eval_cmd->parsed()) return run_eval(pred_path, gt_path, benchmark, report_path);
  if (clip_cmd->parsed()) return run_clip(clip_in, clip_n, clip_out);
  if (synth_cmd->parsed()) {
    return run_synth(synth_out, synth_count, seed, lane_min, lane_max, curvature, noise,
                     occlusion);
  }
  return kExitBadConfig;
}
