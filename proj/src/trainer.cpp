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
#include "keylane/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "keylane/core/grid.hpp"
#include "keylane/data/augment.hpp"
#include "keylane/data/sampler.hpp"
#include "keylane/data/synthetic.hpp"
#include "keylane/data/tusimple.hpp"
#include "keylane/net/checkpoint.hpp"
#include "keylane/post/postprocess.hpp"

namespace keylane::train {

namespace fs = std::filesystem;

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["global_step"] = global_step;
  j["lr"] = lr;
  j["gamma_e"] = gamma_e;
  j["loss"] = {{"exist", losses.exist},         {"non_exist", losses.non_exist},
               {"offset", losses.offset},       {"feature", losses.feature},
               {"distillation", losses.distillation}, {"total", losses.total}};
  if (evaluated) {
    nlohmann::json v;
    for (const auto& [n, rep] : val) {
      v[std::to_string(n)] = {{"accuracy", rep.accuracy},
                              {"fp", rep.fp_rate},
                              {"fn", rep.fn_rate}};
    }
    j["val"] = v;
    nlohmann::json a;
    for (const auto& [n, d] : attn_gap) a[std::to_string(n)] = d;
    j["attn_gap"] = a;
  }
  return j;
}

std::vector<data::Sample> build_pool(const TrainConfig& cfg) {
  if (cfg.dataset_kind == "synthetic") {
    data::SyntheticSceneConfig sc;
    sc.lane_count_min = cfg.synth_lane_min;
    sc.lane_count_max = cfg.synth_lane_max;
    sc.curvature = cfg.synth_curvature;
    sc.noise = cfg.synth_noise;
    sc.occlusion = cfg.synth_occlusion;
    sc.seed = cfg.seed;
    return data::generate_synthetic_pool(sc, cfg.synth_count);
  }
  if (cfg.dataset_kind == "xy") {
    return data::load_xy_dataset(cfg.dataset_path, cfg.image_root);
  }
  return data::load_polyline_dataset(cfg.dataset_path, cfg.image_root);
}

loss::ModuleOutputs<float> slice_outputs(const net::Model<float>::Outputs& out, int sample) {
  loss::ModuleOutputs<float> mo;
  for (const auto& mod : out.mods) {
    PredictionGrid<float> g = PredictionGrid<float>::zeros();
    const int hw = mod.conf.h * mod.conf.w;
    auto copy_plane = [&](const net::Tensor4<float>& t, int ch, Plane<float>& dst) {
      std::memcpy(dst.data(), t.sample(sample) + static_cast<std::size_t>(ch) * hw,
                  sizeof(float) * hw);
    };
    copy_plane(mod.conf, 0, g.confidence);
    for (int d = 0; d < 2; ++d) copy_plane(mod.off, d, g.offset[d]);
    for (int d = 0; d < kEmbeddingDim; ++d) copy_plane(mod.emb, d, g.embedding[d]);
    mo.grids.push_back(std::move(g));

    loss::AttnMat<float> a(mod.attn.c, mod.attn.h * mod.attn.w);
    std::memcpy(a.data(), mod.attn.sample(sample), sizeof(float) * a.size());
    mo.activations.push_back(std::move(a));
  }
  return mo;
}

metrics::XYSampledFrame frame_from_lanes(std::span<const LaneInstance> lanes,
                                         const std::string& id) {
  const data::LabelRecord rec = data::lanes_to_record(lanes, id);
  metrics::XYSampledFrame f;
  f.id = rec.raw_file;
  f.y_samples = rec.h_samples;
  f.lanes = rec.lanes_x;
  return f;
}

namespace {

// Writes the per-image loss gradients back into the batched gradient tensors.
void scatter_grads(net::Model<float>::Grads& grads, int sample,
                   const std::vector<PredictionGrid<float>>& grid_grads,
                   const std::vector<loss::AttnMat<float>>& attn_grads) {
  for (std::size_t m = 0; m < grid_grads.size(); ++m) {
    auto& gm = grads.mods[m];
    const int hw = gm.conf.h * gm.conf.w;
    auto put_plane = [&](net::Tensor4<float>& t, int ch, const Plane<float>& src) {
      std::memcpy(t.sample(sample) + static_cast<std::size_t>(ch) * hw, src.data(),
                  sizeof(float) * hw);
    };
    put_plane(gm.conf, 0, grid_grads[m].confidence);
    for (int d = 0; d < 2; ++d) put_plane(gm.off, d, grid_grads[m].offset[d]);
    for (int d = 0; d < kEmbeddingDim; ++d) put_plane(gm.emb, d, grid_grads[m].embedding[d]);
    std::memcpy(gm.attn.sample(sample), attn_grads[m].data(),
                sizeof(float) * attn_grads[m].size());
  }
}

void clip_gradients(const std::vector<net::ParamRef<float>>& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& p : params) sq += static_cast<double>(p.grad->squaredNorm());
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (const auto& p : params) *p.grad *= scale;
}

}  // namespace

std::map<int, metrics::EvalReport> evaluate_clips(net::Model<float>& model,
                                                  std::span<const data::Sample> samples,
                                                  const TrainConfig& cfg,
                                                  std::map<int, double>* attn_gap) {
  const int depth = model.n_modules();
  std::vector<metrics::XYSampledFrame> gt_frames;
  std::map<int, std::vector<metrics::XYSampledFrame>> pred_frames;
  std::map<int, double> gap_acc;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const data::Sample& s = samples[i];
    gt_frames.push_back(frame_from_lanes(s.lanes, s.source_id));

    net::Tensor4<float> x(1, 3, kInputHeight, kInputWidth);
    std::memcpy(x.sample(0), s.image.data.data(), sizeof(float) * s.image.data.size());
    const auto out = model.infer(x, depth);
    const auto mo = slice_outputs(out, 0);

    const auto teacher_map = loss::attention_map<float>(mo.activations[depth - 1]);
    for (int n = 1; n <= depth; ++n) {
      post::DetectOptions opt;
      opt.conf_threshold = cfg.conf_threshold_for(n);
      opt.cluster_distance = cfg.cluster_distance;
      opt.min_cluster_size = cfg.min_cluster_size;
      opt.smooth_factor = cfg.smooth_factor;
      const auto lanes = post::detect(mo.grids[n - 1], opt);
      pred_frames[n].push_back(frame_from_lanes(lanes, s.source_id));
      if (n < depth) {
        gap_acc[n] += static_cast<double>(loss::attention_sq_distance<float>(
            teacher_map, loss::attention_map<float>(mo.activations[n - 1])));
      }
    }
  }

  std::map<int, metrics::EvalReport> reports;
  for (auto& [n, frames] : pred_frames) {
    reports[n] = metrics::tusimple_score(frames, gt_frames);
  }
  if (attn_gap) {
    for (auto& [n, acc] : gap_acc) {
      (*attn_gap)[n] = samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
    }
  }
  return reports;
}

TrainResult train(const TrainConfig& cfg, std::vector<data::Sample>& pool,
                  net::Model<float>& model, net::Adam<float>& optimizer,
                  const EpochCallback& callback, int start_epoch) {
  cfg.validate();
  if (pool.empty()) throw Error("train: dataset is empty");
  if (cfg.batch_size > static_cast<int>(pool.size())) {
    throw Error("train: batch_size exceeds the pool size");
  }
  fs::create_directories(cfg.out_dir);
  std::ofstream history_out(fs::path(cfg.out_dir) / "history.jsonl", std::ios::app);
  if (!history_out) throw IoError("train: cannot open history stream in " + cfg.out_dir);

  const auto augment_ops = data::parse_augment_ops(cfg.augment_ops);
  const int steps_per_epoch =
      static_cast<int>((pool.size() + cfg.batch_size - 1) / cfg.batch_size);

  // validation split: held-out tail, or the training pool itself
  std::span<const data::Sample> train_span(pool);
  std::span<const data::Sample> val_span(pool);
  if (!cfg.eval_on_train && cfg.val_count > 0 &&
      cfg.val_count < static_cast<int>(pool.size())) {
    train_span = std::span<const data::Sample>(pool).first(pool.size() - cfg.val_count);
    val_span = std::span<const data::Sample>(pool).last(cfg.val_count);
  }
  const int train_count = static_cast<int>(train_span.size());

  const auto params = model.params();
  optimizer.lr = (start_epoch == 0) ? cfg.lr : optimizer.lr;

  TrainResult result;
  double best_headline = -1.0;
  int evals_since_best = 0;

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const HyperParams hp = cfg.hyper(epoch);
    Rng sampler_rng(mix_seed(cfg.seed, 0x73616d70ULL + static_cast<std::uint64_t>(epoch)));
    loss::Breakdown<double> epoch_losses;

    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<double> losses(train_count);
      for (int i = 0; i < train_count; ++i) losses[i] = train_span[i].last_loss;
      const auto indices =
          data::sample_batch_indices(losses, cfg.batch_size, cfg.hard_fraction, sampler_rng);

      // augmentation: each selected op joins with augment_prob per sample
      std::vector<data::Sample> batch;
      std::vector<GroundTruthGrid> gts;
      for (std::size_t bi = 0; bi < indices.size(); ++bi) {
        const std::uint64_t aug_seed =
            mix_seed(cfg.seed, 0x617567ULL + (static_cast<std::uint64_t>(epoch) << 24) +
                                   (static_cast<std::uint64_t>(step) << 12) + bi);
        data::Sample s = pool[indices[bi]];
        if (!augment_ops.empty()) {
          Rng pick(mix_seed(aug_seed, 1));
          std::vector<data::AugmentOp> chosen;
          for (auto op : augment_ops) {
            if (pick.uniform() < cfg.augment_prob) chosen.push_back(op);
          }
          s = data::augment(s, chosen, aug_seed);
        }
        gts.push_back(encode_label(s.lanes));
        batch.push_back(std::move(s));
      }

      std::vector<int> batch_ids(indices.begin(), indices.end());
      net::Tensor4<float> x(static_cast<int>(batch.size()), 3, kInputHeight, kInputWidth);
      for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        std::memcpy(x.sample(static_cast<int>(bi)), batch[bi].image.data.data(),
                    sizeof(float) * batch[bi].image.data.size());
      }

      typename net::Model<float>::State st;
      const auto out = model.forward(x, model.n_modules(), st, true);
      auto grads = model.make_zero_grads(out);

      loss::Breakdown<double> batch_losses;
      const float scale = 1.0f / static_cast<float>(batch.size());
      for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const auto mo = slice_outputs(out, static_cast<int>(bi));
        std::vector<PredictionGrid<float>> grid_grads(mo.grids.size(),
                                                      PredictionGrid<float>::zeros());
        std::vector<loss::AttnMat<float>> attn_grads;
        for (const auto& a : mo.activations) {
          attn_grads.push_back(loss::AttnMat<float>::Zero(a.rows(), a.cols()));
        }
        const auto b = loss::total_loss_grad(mo, gts[bi], hp, grid_grads, attn_grads, scale,
                                             cfg.stop_teacher);
        scatter_grads(grads, static_cast<int>(bi), grid_grads, attn_grads);
        batch_losses.exist += b.exist * scale;
        batch_losses.non_exist += b.non_exist * scale;
        batch_losses.offset += b.offset * scale;
        batch_losses.feature += b.feature * scale;
        batch_losses.distillation += b.distillation * scale;
        batch_losses.total += b.total * scale;

        // hard-mining signal: deepest module's weighted loss for this sample
        const auto& last = mo.grids.back();
        pool[indices[bi]].last_loss =
            hp.gamma_e * loss::exist_loss(last, gts[bi]) +
            hp.gamma_n * loss::non_exist_loss(last, gts[bi]) +
            hp.gamma_o * loss::offset_loss(last, gts[bi]) +
            hp.gamma_f * loss::feature_loss(last, gts[bi], static_cast<float>(hp.margin));
      }

      if (!std::isfinite(batch_losses.total)) {
        nlohmann::json snap;
        snap["epoch"] = epoch;
        snap["step"] = step;
        snap["loss"] = {{"exist", batch_losses.exist},
                        {"non_exist", batch_losses.non_exist},
                        {"offset", batch_losses.offset},
                        {"feature", batch_losses.feature},
                        {"distillation", batch_losses.distillation},
                        {"total", batch_losses.total}};
        nlohmann::json ids = nlohmann::json::array();
        for (std::size_t bi = 0; bi < batch.size(); ++bi) ids.push_back(batch[bi].source_id);
        snap["batch"] = ids;
        std::ofstream snap_out(fs::path(cfg.out_dir) / "abort_snapshot.json");
        snap_out << snap.dump(2) << "\n";
        throw TrainAbort("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                         std::to_string(step) + "; snapshot written to " + cfg.out_dir);
      }

      model.zero_grad();
      model.backward(x, st, out, grads);
      clip_gradients(params, cfg.grad_clip);
      optimizer.step(params);

      epoch_losses.exist += batch_losses.exist / steps_per_epoch;
      epoch_losses.non_exist += batch_losses.non_exist / steps_per_epoch;
      epoch_losses.offset += batch_losses.offset / steps_per_epoch;
      epoch_losses.feature += batch_losses.feature / steps_per_epoch;
      epoch_losses.distillation += batch_losses.distillation / steps_per_epoch;
      epoch_losses.total += batch_losses.total / steps_per_epoch;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.global_step = static_cast<long>(epoch + 1) * steps_per_epoch;
    rec.losses = epoch_losses;
    rec.lr = optimizer.lr;
    rec.gamma_e = hp.gamma_e;

    const bool last_epoch = (epoch + 1 == cfg.epochs);
    bool stop = false;
    if (cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || last_epoch)) {
      rec.evaluated = true;
      rec.val = evaluate_clips(model, val_span, cfg, &rec.attn_gap);
      const auto& headline = rec.val.at(model.n_modules());
      if (cfg.stop_accuracy > 0.0 && headline.accuracy >= cfg.stop_accuracy &&
          headline.fp_rate <= cfg.stop_fp) {
        stop = true;
      }
      if (cfg.plateau_patience > 0) {
        if (headline.accuracy > best_headline + 1e-9) {
          best_headline = headline.accuracy;
          evals_since_best = 0;
        } else if (++evals_since_best >= cfg.plateau_patience) {
          optimizer.lr = std::max(optimizer.lr * 0.5, cfg.min_lr);
          evals_since_best = 0;
        }
      }
    }

    history_out << rec.to_json().dump() << "\n";
    history_out.flush();
    result.history.push_back(rec);
    result.epochs_run = epoch + 1;

    const bool checkpoint_now =
        last_epoch || stop || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0);
    if (checkpoint_now) {
      nlohmann::json extra;
      extra["epoch"] = epoch + 1;
      extra["global_step"] = rec.global_step;
      extra["lr"] = optimizer.lr;
      net::save_checkpoint((fs::path(cfg.out_dir) / "latest.bin").string(), model, extra,
                           &optimizer);
    }

    if (callback && !callback(rec, model)) stop = true;
    if (stop) {
      result.stopped_early = !last_epoch;
      break;
    }
  }
  return result;
}

}  // namespace keylane::train
