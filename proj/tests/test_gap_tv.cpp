#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "vcs/gap_tv.hpp"
#include "vcs/metrics.hpp"
#include "vcs/sensing.hpp"
#include "vcs/training.hpp"

using namespace vcs;

namespace {

// Independent objective evaluation: direct forward-difference TV plus the
// quadratic fidelity, written against the cube API only.
double objective_oracle(const VideoCube& z, const VideoCube& x, const GapTvConfig& cfg) {
  double fid = 0.0;
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    const double d = z.data[i] - x.data[i];
    fid += d * d;
  }
  double tv = 0.0;
  for (int f = 0; f < z.t; ++f) {
    for (int xx = 0; xx < z.w; ++xx) {
      for (int yy = 0; yy < z.h; ++yy) {
        const double gx = xx + 1 < z.w ? z.at(xx + 1, yy, f) - z.at(xx, yy, f) : 0.0;
        const double gy = yy + 1 < z.h ? z.at(xx, yy + 1, f) - z.at(xx, yy, f) : 0.0;
        tv += cfg.tv_mode == TvMode::anisotropic ? std::abs(gx) + std::abs(gy)
                                                 : std::sqrt(gx * gx + gy * gy);
      }
    }
  }
  return 0.5 * fid + cfg.tv_weight * tv;
}

VideoCube noisy_step_edge(int w, int h, std::mt19937_64& rng) {
  VideoCube v(w, h, 1);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      v.at(x, y, 0) = (x < w / 2 ? 0.25 : 0.75) + noise(rng);
    }
  }
  return v;
}

}  // namespace

TEST_CASE("tv_denoise leaves constant frames unchanged") {
  VideoCube v(8, 8, 2);
  std::fill(v.data.begin(), v.data.end(), 0.4);
  GapTvConfig cfg;
  const VideoCube out = tv_denoise(v, cfg);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    CHECK(out.data[i] == doctest::Approx(v.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("tv_denoise with vanishing weight is the identity") {
  std::mt19937_64 rng(31);
  const VideoCube v = testutil::random_video(10, 12, 2, rng);
  GapTvConfig cfg;
  cfg.tv_weight = 1e-9;
  const VideoCube out = tv_denoise(v, cfg);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    CHECK(std::abs(out.data[i] - v.data[i]) < 1e-5);
  }
}

TEST_CASE("tv_denoise strictly decreases the objective on a noisy step edge") {
  std::mt19937_64 rng(32);
  const VideoCube x = noisy_step_edge(16, 16, rng);
  GapTvConfig cfg;  // lambda = 0.07
  const VideoCube z = tv_denoise(x, cfg);
  const double before = objective_oracle(x, x, cfg);
  const double after = objective_oracle(z, x, cfg);
  CHECK(after < before);
  // frozen from the first oracle run of this configuration (seed 32)
  CHECK(before == doctest::Approx(4.26865).epsilon(1e-3));
  CHECK(after == doctest::Approx(1.94643).epsilon(1e-3));
  // core evaluator agrees with the independent oracle
  CHECK(tv_objective(z, x, cfg) == doctest::Approx(after).epsilon(1e-9));
}

TEST_CASE("tv_denoise never increases the objective (random instances, both modes)") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const VideoCube x = testutil::random_video(12, 9, 2, rng);
    GapTvConfig cfg;
    cfg.tv_mode = trial % 2 == 0 ? TvMode::anisotropic : TvMode::isotropic;
    cfg.tv_weight = 0.01 + 0.05 * (trial % 5);
    cfg.tv_inner_iters = 1 + trial % 7;
    const VideoCube z = tv_denoise(x, cfg);
    CHECK(objective_oracle(z, x, cfg) <= objective_oracle(x, x, cfg) + 1e-12);
  }
}

TEST_CASE("GapTvConfig validation") {
  GapTvConfig cfg;
  cfg.iters = 0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.tv_weight = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.tv_inner_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
}

TEST_CASE("gap_tv_reconstruct recovers a noiseless static scene above 40 dB") {
  // static scene with (near) zero TV: constant frames, where the normalized
  // measurement already equals the scene and TV denoising preserves it
  VideoCube scene(16, 16, 4);
  std::fill(scene.data.begin(), scene.data.end(), 0.63);
  MaskCube m = generate_masks(16, 16, 4, 55, MaskKind::binary);
  for (int x = 0; x < 16; ++x) {
    for (int y = 0; y < 16; ++y) m.at(x, y, 0) = 1.0;  // full coverage
  }
  const Measurement y = forward_measure(scene, m, 0.0);
  const VideoCube rec = gap_tv_reconstruct(y, m, GapTvConfig{});
  CHECK(psnr(rec, scene) >= 40.0);
}

TEST_CASE("gap_tv_reconstruct beats the RMF baseline on a moving scene") {
  const std::vector<VideoCube> scenes = synth_scenes(1, 32, 32, 4, ColorSpace::gray, 77);
  const VideoCube& scene = scenes[0];
  const MaskCube m = generate_masks(32, 32, 4, 56, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);
  const VideoCube rec = gap_tv_reconstruct(y, m, GapTvConfig{});

  VideoCube rmf = reference_frames(y, m).rmf;
  for (double& v : rmf.data) v = std::clamp(v, 0.0, 1.0);
  CHECK(psnr(rec, scene) > psnr(rmf, scene));
}

TEST_CASE("gap_tv_reconstruct is deterministic") {
  const std::vector<VideoCube> scenes = synth_scenes(1, 16, 16, 2, ColorSpace::gray, 78);
  const MaskCube m = generate_masks(16, 16, 2, 57, MaskKind::binary);
  const Measurement y = forward_measure(scenes[0], m, 0.0);
  GapTvConfig cfg;
  cfg.iters = 10;
  const VideoCube a = gap_tv_reconstruct(y, m, cfg);
  const VideoCube b = gap_tv_reconstruct(y, m, cfg);
  CHECK(a.data == b.data);
}

TEST_CASE("gap_tv_reconstruct every projection iterate is measurement-consistent") {
  // run the alternation manually and check the inherited invariant
  const std::vector<VideoCube> scenes = synth_scenes(1, 16, 16, 3, ColorSpace::gray, 79);
  const MaskCube m = generate_masks(16, 16, 3, 58, MaskKind::binary);
  const Measurement y = forward_measure(scenes[0], m, 0.0);
  const QDiagonal q = q_diagonal(m);
  GapTvConfig cfg;
  VideoCube v = reference_frames(y, m).rmf;
  for (int it = 0; it < 5; ++it) {
    const VideoCube x = gap_project(v, y, m, q);
    for (int xx = 0; xx < 16; ++xx) {
      for (int yy = 0; yy < 16; ++yy) {
        if (q.at(xx, yy) <= kCoverageEps) continue;
        double acc = 0.0;
        for (int f = 0; f < 3; ++f) acc += m.at(xx, yy, f) * x.at(xx, yy, f);
        CHECK(std::abs(acc - y.at(xx, yy)) < 1e-5);
      }
    }
    v = tv_denoise(x, cfg);
  }
}
