#include "vcs/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace vcs {

void TrainConfig::validate() const {
  for (int e : epochs_per_phase) {
    if (e < 0) throw DimensionError("TrainConfig: epochs must be >= 0");
  }
  if (batch_size < 1) throw DimensionError("TrainConfig: batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw DimensionError("TrainConfig: lr0 must be > 0");
  if (lr_warm_epochs < 0) throw DimensionError("TrainConfig: lr_warm_epochs must be >= 0");
  if (!(lr_decay > 0.0)) throw DimensionError("TrainConfig: lr_decay must be > 0");
  if (lr_decay_every < 1) throw DimensionError("TrainConfig: lr_decay_every must be >= 1");
  if (samples < 1) throw DimensionError("TrainConfig: samples must be >= 1");
  if (width < 2 || height < 2 || frames < 1) {
    throw DimensionError("TrainConfig: frame dims too small");
  }
}

double lr_schedule(const TrainConfig& cfg, int epoch_in_phase) {
  if (epoch_in_phase < cfg.lr_warm_epochs) return cfg.lr0;
  const int block = (epoch_in_phase - cfg.lr_warm_epochs) / cfg.lr_decay_every + 1;
  return cfg.lr0 * std::pow(cfg.lr_decay, block);
}

// ---------------------------------------------------------------------------
// Synthetic scenes

namespace {

struct MovingObject {
  bool disc = false;
  double half_w = 4, half_h = 4;
  double x0 = 0, y0 = 0;  // center at frame 0
  int vx = 0, vy = 0;     // integer pixels per frame
  double color[3] = {0.5, 0.5, 0.5};
  double stripe_period = 6.0;
  double stripe_amp = 0.15;
  bool stripes_vertical = false;
};

// Reflecting walk: advances the center by v each frame, bouncing off the
// walls so the object stays inside.
std::pair<double, double> object_center(const MovingObject& o, int frame, int w, int h) {
  auto bounce = [](double p, int v, int frame_idx, double lo, double hi) {
    if (hi <= lo) return (lo + hi) / 2;
    double pos = p - lo + v * frame_idx;
    const double span = 2 * (hi - lo);
    pos = std::fmod(pos, span);
    if (pos < 0) pos += span;
    if (pos > hi - lo) pos = span - pos;
    return lo + pos;
  };
  return {bounce(o.x0, o.vx, frame, o.half_w, w - 1 - o.half_w),
          bounce(o.y0, o.vy, frame, o.half_h, h - 1 - o.half_h)};
}

VideoCube render_scene(int w, int h, int t, ColorSpace mode, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int channels = mode == ColorSpace::rgb ? 3 : 1;

  // static background: bilinear ramp between four corner intensities
  double corners[3][4];
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 4; ++k) corners[c][k] = 0.1 + 0.5 * uni(rng);
  }

  const int n_obj = 1 + static_cast<int>(uni(rng) * 3.0);  // 1..3
  std::vector<MovingObject> objects(n_obj);
  bool any_motion = false;
  for (MovingObject& o : objects) {
    o.disc = uni(rng) < 0.5;
    o.half_w = w / 12.0 + uni(rng) * w / 8.0;
    o.half_h = h / 12.0 + uni(rng) * h / 8.0;
    o.x0 = o.half_w + uni(rng) * (w - 1 - 2 * o.half_w);
    o.y0 = o.half_h + uni(rng) * (h - 1 - 2 * o.half_h);
    o.vx = static_cast<int>(uni(rng) * 7.0) - 3;  // -3..3
    o.vy = static_cast<int>(uni(rng) * 7.0) - 3;
    for (int c = 0; c < 3; ++c) o.color[c] = 0.2 + 0.8 * uni(rng);
    o.stripe_period = 4.0 + uni(rng) * 4.0;
    o.stripe_amp = 0.1 + uni(rng) * 0.1;
    o.stripes_vertical = uni(rng) < 0.5;
    any_motion = any_motion || o.vx != 0 || o.vy != 0;
  }
  if (!any_motion) {
    objects[0].vx = 1 + static_cast<int>(uni(rng) * 2.0);
    objects[0].vy = 1;
  }

  VideoCube v(w, h, t, mode);
  for (int f = 0; f < t; ++f) {
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        const double fx = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
        const double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
        for (int c = 0; c < channels; ++c) {
          double val = corners[c][0] * (1 - fx) * (1 - fy) + corners[c][1] * fx * (1 - fy) +
                       corners[c][2] * (1 - fx) * fy + corners[c][3] * fx * fy;
          v.at(x, y, f, c) = val;
        }
      }
    }
    for (const MovingObject& o : objects) {
      const auto [cx, cy] = object_center(o, f, w, h);
      const int x_lo = std::max(0, static_cast<int>(std::floor(cx - o.half_w)));
      const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(cx + o.half_w)));
      const int y_lo = std::max(0, static_cast<int>(std::floor(cy - o.half_h)));
      const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(cy + o.half_h)));
      for (int x = x_lo; x <= x_hi; ++x) {
        for (int y = y_lo; y <= y_hi; ++y) {
          const double dx = (x - cx) / o.half_w;
          const double dy = (y - cy) / o.half_h;
          const bool inside = o.disc ? dx * dx + dy * dy <= 1.0
                                     : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
          if (!inside) continue;
          // stripes anchored to the object frame so texture moves rigidly
          const double u = o.stripes_vertical ? (x - cx) : (y - cy);
          const double stripe =
              o.stripe_amp * (std::sin(2.0 * 3.14159265358979323846 * u / o.stripe_period) >= 0.0
                                  ? 1.0
                                  : -1.0);
          for (int c = 0; c < channels; ++c) {
            v.at(x, y, f, c) = std::clamp(o.color[c] + stripe, 0.0, 1.0);
          }
        }
      }
    }
  }
  return v;
}

VideoCube rotate90(const VideoCube& v) {
  // (x, y) -> (y, W-1-x): output has swapped dims
  VideoCube out(v.h, v.w, v.t, v.colorspace);
  for (int x = 0; x < v.w; ++x) {
    for (int y = 0; y < v.h; ++y) {
      for (int f = 0; f < v.t; ++f) {
        for (int c = 0; c < v.channels(); ++c) {
          out.at(y, v.w - 1 - x, f, c) = v.at(x, y, f, c);
        }
      }
    }
  }
  return out;
}

VideoCube hflip(const VideoCube& v) {
  VideoCube out(v.w, v.h, v.t, v.colorspace);
  for (int x = 0; x < v.w; ++x) {
    for (int y = 0; y < v.h; ++y) {
      for (int f = 0; f < v.t; ++f) {
        for (int c = 0; c < v.channels(); ++c) {
          out.at(v.w - 1 - x, y, f, c) = v.at(x, y, f, c);
        }
      }
    }
  }
  return out;
}

VideoCube augmented_scene(int w, int h, int t, ColorSpace mode, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rot_dist(0, 3);
  std::bernoulli_distribution flip_dist(0.5);
  const int rot = rot_dist(rng);
  const bool flip = flip_dist(rng);
  // generate at pre-rotation dims so the result lands on (w, h)
  const bool swapped = rot == 1 || rot == 3;
  VideoCube v = render_scene(swapped ? h : w, swapped ? w : h, t, mode, rng);
  for (int r = 0; r < rot; ++r) v = rotate90(v);
  if (flip) v = hflip(v);
  return v;
}

}  // namespace

std::vector<VideoCube> synth_scenes(int count, int w, int h, int t, ColorSpace mode,
                                    std::uint64_t seed) {
  std::vector<VideoCube> scenes;
  scenes.reserve(count);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) scenes.push_back(augmented_scene(w, h, t, mode, rng));
  return scenes;
}

std::vector<VideoCube> synth_dataset(const TrainConfig& cfg) {
  cfg.validate();
  return synth_scenes(cfg.samples, cfg.width, cfg.height, cfg.frames, cfg.mode, cfg.seed);
}

// ---------------------------------------------------------------------------
// Losses

double mse_loss(const VideoCube& pred, const VideoCube& truth) {
  if (pred.w != truth.w || pred.h != truth.h || pred.t != truth.t ||
      pred.colorspace != truth.colorspace) {
    throw DimensionError("mse_loss: shape mismatch " + shape_string(pred) + " vs " +
                         shape_string(truth));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - truth.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.data.size());
}

double stage_wise_loss(const VideoCube& v1, const VideoCube& v2, const VideoCube& truth) {
  return 0.5 * mse_loss(v1, truth) + mse_loss(v2, truth);
}

std::string loss_log_csv(const std::vector<LossRow>& rows) {
  std::ostringstream os;
  os << "epoch,phase,lr,loss\n";
  os.precision(17);
  for (const LossRow& r : rows) {
    os << r.epoch << "," << r.phase << "," << r.lr << "," << r.loss << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

constexpr double kGradClipNorm = 5.0;

struct Sample {
  Tensor<float> truth;   // [c,T,H,W]
  SensingSystem<float> sys;
  Tensor<float> v0;      // RMF (gray fuses it; color uses the mosaicked RMF)
};

Sample make_sample(const VideoCube& scene, const MaskCube& mask) {
  Sample s;
  s.truth = tensor_from_cube<float>(scene);
  const Measurement y = scene.colorspace == ColorSpace::rgb ? forward_measure_color(scene, mask, 0.0)
                                                            : forward_measure(scene, mask, 0.0);
  s.sys = prepare_system<float>(y, mask);
  s.v0 = tensor_from_cube<float>(reference_frames(y, mask).rmf);
  return s;
}

}  // namespace

TrainResult train(UnfoldModel<float>& model, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (model.spec.mode != cfg.mode) {
    throw DimensionError("train: model mode does not match TrainConfig mode");
  }
  const bool color = cfg.mode == ColorSpace::rgb;
  if (color && (cfg.width % 2 != 0 || cfg.height % 2 != 0)) {
    throw DimensionError("train: color mode needs even W and H");
  }

  TrainResult result;
  result.mask = generate_masks(cfg.width, cfg.height, cfg.frames, cfg.seed, MaskKind::binary);
  const std::vector<VideoCube> scenes = synth_dataset(cfg);

  // Per-scene inputs for the fixed mask; rebuilt per batch when resampling.
  std::vector<Sample> fixed_samples;
  if (!cfg.resample_masks_per_batch) {
    fixed_samples.reserve(scenes.size());
    for (const VideoCube& sc : scenes) fixed_samples.push_back(make_sample(sc, result.mask));
  }

  const int num_stages = model.spec.stages;
  const bool phased = num_stages == 2;
  const int num_phases = phased ? 3 : 1;
  int global_epoch = 0;

  auto checkpoint = [&](const std::string& tag) {
    if (hooks.on_checkpoint) hooks.on_checkpoint(tag, model);
  };

  for (int phase = 1; phase <= num_phases; ++phase) {
    int epochs = 0;
    int first_stage = 0, last_stage = num_stages - 1;
    if (phased) {
      epochs = cfg.epochs_per_phase[phase - 1];
      for (int j = 0; j < num_stages; ++j) model.set_stage_trainable(j, true);
      if (phase == 1) {
        last_stage = 0;
      } else if (phase == 2) {
        model.set_stage_trainable(0, false);
        first_stage = 1;
      }
    } else {
      epochs = cfg.epochs_per_phase[0] + cfg.epochs_per_phase[1] + cfg.epochs_per_phase[2];
      for (int j = 0; j < num_stages; ++j) model.set_stage_trainable(j, true);
    }

    std::vector<Parameter<float>*> trainable;
    for (Parameter<float>* p : model.params()) {
      if (p->trainable) trainable.push_back(p);
    }
    AdamState<float> opt;

    // Stage-1 is frozen during phase 2: its per-sample outputs are constant
    // and can be computed once.
    std::vector<Tensor<float>> frozen_v1;
    if (phased && phase == 2 && !cfg.resample_masks_per_batch) {
      frozen_v1.reserve(fixed_samples.size());
      for (const Sample& s : fixed_samples) {
        frozen_v1.push_back(
            color ? model.stages[0].eval(gap_project_tensor(s.v0, s.sys))
                  : stage_forward_tensor(model.stages[0], s.v0, s.sys, s.v0));
      }
    }

    for (int epoch = 0; epoch < epochs; ++epoch, ++global_epoch) {
      const double lr = lr_schedule(cfg, epoch);
      std::vector<int> order(scenes.size());
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 shuffle_rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (global_epoch + 1)));
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      double epoch_loss = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        const float inv_b = 1.0f / static_cast<float>(stop - start);
        zero_grads(trainable);

        MaskCube batch_mask;
        if (cfg.resample_masks_per_batch) {
          batch_mask = generate_masks(
              cfg.width, cfg.height, cfg.frames,
              cfg.seed ^ (0xd1342543de82ef95ULL * (global_epoch * 100000ULL + start + 1)),
              MaskKind::binary);
        }

        double batch_loss = 0.0;
        for (std::size_t s = start; s < stop; ++s) {
          const int idx = order[s];
          Sample local;
          const Sample& sample = cfg.resample_masks_per_batch
                                     ? (local = make_sample(scenes[idx], batch_mask), local)
                                     : fixed_samples[idx];

          Tape<float> tape;
          const int truth = tape.constant_ref(&sample.truth);
          std::vector<int> outs;
          int loss_node = -1;

          if (phased && phase == 2) {
            Tensor<float> v1 = !cfg.resample_masks_per_batch
                                   ? frozen_v1[idx]
                                   : (color ? model.stages[0].eval(
                                                  gap_project_tensor(sample.v0, sample.sys))
                                            : stage_forward_tensor(model.stages[0], sample.v0,
                                                                   sample.sys, sample.v0));
            int v1_id;
            if (color) {
              v1_id = op_bayer_mosaic(tape, tape.constant(std::move(v1)));
            } else {
              v1_id = tape.constant(std::move(v1));
            }
            const int rmf = tape.constant_ref(&sample.v0);
            outs = color ? build_color_stages(tape, model, sample.sys, v1_id, 1, 1)
                         : build_gray_stages(tape, model, sample.sys, v1_id, rmf, 1, 1);
            loss_node = op_mse(tape, outs.back(), truth);
          } else {
            const int v0 = tape.constant_ref(&sample.v0);
            const int rmf = v0;
            outs = color ? build_color_stages(tape, model, sample.sys, v0, first_stage, last_stage)
                         : build_gray_stages(tape, model, sample.sys, v0, rmf, first_stage,
                                             last_stage);
            if (outs.size() == 1) {
              loss_node = op_mse(tape, outs[0], truth);
            } else {
              loss_node = op_mse(tape, outs.back(), truth);
              for (std::size_t j = 0; j + 1 < outs.size(); ++j) {
                loss_node = op_axpy(tape, 0.5f, op_mse(tape, outs[j], truth), loss_node);
              }
            }
          }

          const double sample_loss = static_cast<double>(tape.val(loss_node).data[0]);
          if (!std::isfinite(sample_loss)) {
            checkpoint("abort");
            throw NumericError("train: non-finite loss at epoch " +
                               std::to_string(global_epoch));
          }
          batch_loss += sample_loss;
          tape.backward(loss_node, inv_b);
        }
        clip_global_norm(trainable, static_cast<float>(kGradClipNorm));
        adam_step(trainable, opt, static_cast<float>(lr));
        epoch_loss += batch_loss / static_cast<double>(stop - start);
        ++batches;
      }

      LossRow row{global_epoch, phase, lr, epoch_loss / static_cast<double>(batches)};
      result.log.push_back(row);
      if (hooks.on_epoch) hooks.on_epoch(row);
    }

    checkpoint("phase" + std::to_string(phase));
  }

  for (int j = 0; j < num_stages; ++j) model.set_stage_trainable(j, true);
  return result;
}

}  // namespace vcs
