#pragma once

#include <array>
#include <functional>

#include "vcs/unfold_net.hpp"

namespace vcs {

struct TrainConfig {
  std::array<int, 3> epochs_per_phase = {15, 15, 10};
  int batch_size = 1;
  double lr0 = 5e-5;
  int lr_warm_epochs = 8;   // flat-lr epochs before decay kicks in
  double lr_decay = 0.5;    // factor per decay block
  int lr_decay_every = 5;   // epochs per decay block after warmup
  std::uint64_t seed = 1;
  int samples = 200;        // k synthetic scenes
  int width = 32, height = 32, frames = 4;
  ColorSpace mode = ColorSpace::gray;
  bool resample_masks_per_batch = false;

  void validate() const;
};

/// lr(epoch) = lr0 for epoch < warm, then lr0 * decay^(floor((epoch-warm)/every) + 1).
/// The schedule restarts at each training phase.
double lr_schedule(const TrainConfig& cfg, int epoch_in_phase);

/// Moving textured rectangles and discs over a static background, augmented
/// by a random rotation (0/90/180/270) and optional horizontal flip.
/// Deterministic given cfg.seed.
std::vector<VideoCube> synth_dataset(const TrainConfig& cfg);

/// One held-out style scene stream with an independent seed.
std::vector<VideoCube> synth_scenes(int count, int w, int h, int t, ColorSpace mode,
                                    std::uint64_t seed);

/// (1/(c*B*T*W*H)) * sum of squared errors with B = 1: the plain mean over
/// all cube elements.
double mse_loss(const VideoCube& pred, const VideoCube& truth);

/// 0.5 * mse(v1, truth) + mse(v2, truth).
double stage_wise_loss(const VideoCube& v1, const VideoCube& v2, const VideoCube& truth);

struct LossRow {
  int epoch = 0;  // global epoch index across phases
  int phase = 0;  // 1-based
  double lr = 0.0;
  double loss = 0.0;
};

std::string loss_log_csv(const std::vector<LossRow>& rows);

struct TrainHooks {
  std::function<void(const std::string& tag, const UnfoldModel<float>&)> on_checkpoint;
  std::function<void(const LossRow&)> on_epoch;
};

struct TrainResult {
  std::vector<LossRow> log;
  MaskCube mask;  // the fixed training mask
};

/// Stage-by-stage protocol for J=2: train stage 1 (loss = mse of v1), freeze
/// it and train stage 2 (loss = mse of v2), then unfreeze everything and
/// refine with the stage-wise loss. Adam throughout, gradients clipped at
/// global norm 5, schedule and optimizer restart each phase. J != 2 falls
/// back to end-to-end with per-stage weights 0.5,...,0.5,1 for the summed
/// epoch budget. Aborts with a numeric error (after an "abort" checkpoint)
/// if the loss goes non-finite.
TrainResult train(UnfoldModel<float>& model, const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace vcs
