#pragma once

#include "vcs/cube.hpp"
#include "vcs/projection.hpp"

namespace vcs {

enum class TvMode { anisotropic, isotropic };

struct GapTvConfig {
  int iters = 60;           // outer GAP iterations
  double tv_weight = 0.07;  // lambda
  int tv_inner_iters = 5;   // dual projection steps per denoise call
  TvMode tv_mode = TvMode::anisotropic;

  void validate() const;
};

/// Per-frame 2D ROF denoising, solved in the dual with projected gradient
/// steps of size 1/8 (forward-difference gradient, Neumann boundaries).
VideoCube tv_denoise(const VideoCube& x, const GapTvConfig& cfg);

/// The objective the denoiser descends: 0.5*||z - x||^2 + lambda*TV(z),
/// summed over frames.
double tv_objective(const VideoCube& z, const VideoCube& x, const GapTvConfig& cfg);

/// Classical baseline: v0 = RMF, then alternate gap_project / tv_denoise for
/// cfg.iters rounds. Output clipped to [0,1].
VideoCube gap_tv_reconstruct(const Measurement& y, const MaskCube& m, const GapTvConfig& cfg);

}  // namespace vcs
