#pragma once

#include <string>

#include "vcs/unfold_net.hpp"

namespace vcs {

/// 10*log10(1/MSE) with peak 1, MSE over the whole cube. Identical cubes
/// report +infinity.
double psnr(const VideoCube& x, const VideoCube& ref);

/// Mean SSIM of two single-channel planes (indexed x*h + y), 11x11 Gaussian
/// window sigma=1.5, K1=0.01, K2=0.03, L=1, valid window positions only.
double ssim_frame(const std::vector<double>& a, const std::vector<double>& b, int w, int h);

/// SSIM averaged over frames (and channels for color cubes).
double ssim(const VideoCube& x, const VideoCube& ref);

struct EvalRow {
  std::string condition;
  int scene = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double seconds = 0.0;  // wall-clock per measurement
};

struct EvalReport {
  std::vector<EvalRow> rows;

  struct ConditionAverage {
    std::string condition;
    double psnr = 0.0, ssim = 0.0, seconds = 0.0;
    int count = 0;
  };
  std::vector<ConditionAverage> averages() const;

  std::string to_csv() const;
  std::string to_table() const;
};

/// Dispatches on the model's mode (gray or color) and returns the clipped
/// final estimate.
VideoCube reconstruct(const UnfoldModel<float>& model, const Measurement& y, const MaskCube& m);

/// Simulates and reconstructs every scene under the training mask and n_new
/// fresh seeded masks; one report row per (condition, scene).
EvalReport eval_flexibility_masks(const UnfoldModel<float>& model,
                                  const std::vector<VideoCube>& scenes,
                                  const MaskCube& trained_mask, int n_new = 3,
                                  std::uint64_t seed = 1234);

/// Runs the model unmodified on scenes of a larger spatial size (mask drawn
/// from mask_seed at that size).
EvalReport eval_flexibility_scale(const UnfoldModel<float>& model,
                                  const std::vector<VideoCube>& scenes,
                                  std::uint64_t mask_seed = 99);

/// Splits measurement and masks into tile_rows x tile_cols blocks,
/// reconstructs each block independently, and stitches without blending.
VideoCube tiled_reconstruct(const UnfoldModel<float>& model, const Measurement& y,
                            const MaskCube& m, int tile_rows, int tile_cols);

/// Same tiling with an arbitrary per-block reconstructor (e.g. GAP-TV).
VideoCube tiled_reconstruct(
    const std::function<VideoCube(const Measurement&, const MaskCube&)>& recon,
    const Measurement& y, const MaskCube& m, int tile_rows, int tile_cols);

}  // namespace vcs
