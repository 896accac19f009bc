#pragma once

#include <cstdint>

#include "vcs/cube.hpp"

namespace vcs {

/// Pixels whose summed mask is at or below this threshold are treated as
/// never sensed: normalization and projection skip them.
inline constexpr double kCoverageEps = 1e-6;

/// Draws a W x H x T mask cube. binary: i.i.d. Bernoulli(0.5) in {0,1};
/// continuous: i.i.d. Uniform[0,1]. Deterministic given the seed.
MaskCube generate_masks(int w, int h, int t, std::uint64_t seed, MaskKind kind);

/// Y = sum_t X(:,:,t) .* M(:,:,t) + N with N ~ Normal(0, sigma^2) i.i.d.
/// sigma = 0 gives the exact sum. The noise stream is seeded so simulation
/// pipelines stay reproducible.
Measurement forward_measure(const VideoCube& x, const MaskCube& m, double noise_sigma,
                            std::uint64_t noise_seed = 0);

/// Ybar = Y ./ sum_t M(:,:,t), with 0 where the summed mask is <= eps.
std::vector<double> normalized_measurement(const Measurement& y, const MaskCube& m);

/// Normalized measurement plus the reference measurement frames Ybar .* M.
RefFrames reference_frames(const Measurement& y, const MaskCube& m);

/// RGGB mosaic, R anchored at (row,col) = (0,0): even/even -> R, odd/odd -> B,
/// the other two -> G. Applied independently per frame. W and H must be even.
VideoCube bayer_mosaic(const VideoCube& x_rgb);

/// forward_measure of the Bayer-mosaicked video.
Measurement forward_measure_color(const VideoCube& x_rgb, const MaskCube& m, double noise_sigma,
                                  std::uint64_t noise_seed = 0);

}  // namespace vcs
