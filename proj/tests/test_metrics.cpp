#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "vcs/metrics.hpp"
#include "vcs/training.hpp"

using namespace vcs;

namespace {

// Independent SSIM reference: direct weighted sums over every 11x11 window,
// no separable filtering.
double ssim_reference(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
  constexpr int win = 11;
  const double sigma = 1.5;
  double weights[win][win];
  double wsum = 0.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double di = i - 5.0, dj = j - 5.0;
      weights[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      wsum += weights[i][j];
    }
  }
  for (auto& row : weights) {
    for (double& v : row) v /= wsum;
  }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  auto at = [h](const std::vector<double>& img, int x, int y) {
    return img[static_cast<std::size_t>(x) * h + y];
  };
  double acc = 0.0;
  int count = 0;
  for (int x0 = 0; x0 + win <= w; ++x0) {
    for (int y0 = 0; y0 + win <= h; ++y0) {
      double ma = 0, mb = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          ma += weights[i][j] * at(a, x0 + i, y0 + j);
          mb += weights[i][j] * at(b, x0 + i, y0 + j);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double da = at(a, x0 + i, y0 + j) - ma;
          const double db = at(b, x0 + i, y0 + j) - mb;
          va += weights[i][j] * da * da;
          vb += weights[i][j] * db * db;
          cov += weights[i][j] * da * db;
        }
      }
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return acc / count;
}

UnfoldModel<float> tiny_model(std::uint64_t seed) {
  return UnfoldModel<float>::create(UnfoldSpec{2, 4, 1, ColorSpace::gray}, seed);
}

}  // namespace

TEST_CASE("psnr closed forms") {
  std::mt19937_64 rng(1);
  const VideoCube x = testutil::random_video(8, 8, 2, rng);
  CHECK(std::isinf(psnr(x, x)));

  VideoCube ref = x;
  VideoCube off = x;
  for (double& v : off.data) v += 0.1;  // uniform error, MSE = 0.01
  CHECK(psnr(off, ref) == doctest::Approx(20.0).epsilon(1e-9));

  const VideoCube y = testutil::random_video(8, 8, 2, rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    acc += (x.data[i] - y.data[i]) * (x.data[i] - y.data[i]);
  }
  CHECK(psnr(x, y) ==
        doctest::Approx(10.0 * std::log10(x.data.size() / acc)).epsilon(1e-12));

  VideoCube wrong(8, 8, 3);
  CHECK_THROWS_AS(psnr(x, wrong), DimensionError);
}

TEST_CASE("psnr strictly decreases as noise grows") {
  std::mt19937_64 rng(2);
  const VideoCube ref = testutil::random_video(16, 16, 2, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    VideoCube noisy = ref;
    std::normal_distribution<double> n(0.0, sigma);
    for (double& v : noisy.data) v += n(rng);
    const double p = psnr(noisy, ref);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim identities and symmetry") {
  std::mt19937_64 rng(3);
  const VideoCube x = testutil::random_video(16, 16, 2, rng);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  const VideoCube y = testutil::random_video(16, 16, 2, rng);
  CHECK(std::abs(ssim(x, y) - ssim(y, x)) <= 1e-12);
}

TEST_CASE("ssim constant-patch closed form") {
  const double a = 0.4, b = 0.5;
  VideoCube xa(16, 16, 1), xb(16, 16, 1);
  std::fill(xa.data.begin(), xa.data.end(), a);
  std::fill(xb.data.begin(), xb.data.end(), b);
  const double c1 = 1e-4;
  const double expect = (2 * a * b + c1) / (a * a + b * b + c1);  // variance terms vanish
  CHECK(ssim(xa, xb) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("ssim agrees with the direct-window reference on random frames") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 32, h = 32;
    std::vector<double> a(w * h), b(w * h);
    std::uniform_real_distribution<double> uni(0, 1);
    for (double& v : a) v = uni(rng);
    // correlated pair: b = blend of a and noise
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.7 * a[i] + 0.3 * uni(rng);
    CHECK(std::abs(ssim_frame(a, b, w, h) - ssim_reference(a, b, w, h)) < 1e-4);
  }
}

TEST_CASE("ssim rejects frames smaller than the window") {
  VideoCube small(8, 8, 1);
  CHECK_THROWS_AS(ssim(small, small), DimensionError);
}

TEST_CASE("EvalReport averages equal the mean of rows") {
  EvalReport r;
  r.rows = {{"a", 0, 30.0, 0.9, 1.0}, {"a", 1, 34.0, 0.8, 3.0}, {"b", 0, 20.0, 0.5, 2.0}};
  const auto avgs = r.averages();
  REQUIRE(avgs.size() == 2);
  CHECK(avgs[0].condition == "a");
  CHECK(avgs[0].psnr == doctest::Approx(32.0));
  CHECK(avgs[0].ssim == doctest::Approx(0.85));
  CHECK(avgs[0].seconds == doctest::Approx(2.0));
  CHECK(avgs[0].count == 2);
  CHECK(avgs[1].psnr == doctest::Approx(20.0));

  const std::string csv = r.to_csv();
  CHECK(csv.substr(0, 31) == "condition,scene,psnr_db,ssim,se");
  CHECK(r.to_table().find("a") != std::string::npos);
}

TEST_CASE("per-block measurements equal blocks of the full measurement") {
  // the forward model is pixel-local, so simulation and tiling commute
  std::mt19937_64 rng(5);
  const VideoCube scene = testutil::random_video(16, 12, 3, rng);
  const MaskCube m = generate_masks(16, 12, 3, 71, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);

  const int bw = 8, bh = 6;
  for (int tc = 0; tc < 2; ++tc) {
    for (int tr = 0; tr < 2; ++tr) {
      VideoCube bs(bw, bh, 3);
      MaskCube bm(bw, bh, 3, m.kind);
      for (int x = 0; x < bw; ++x) {
        for (int yy = 0; yy < bh; ++yy) {
          for (int f = 0; f < 3; ++f) {
            bs.at(x, yy, f) = scene.at(tc * bw + x, tr * bh + yy, f);
            bm.at(x, yy, f) = m.at(tc * bw + x, tr * bh + yy, f);
          }
        }
      }
      const Measurement by = forward_measure(bs, bm, 0.0);
      for (int x = 0; x < bw; ++x) {
        for (int yy = 0; yy < bh; ++yy) {
          CHECK(by.at(x, yy) == doctest::Approx(y.at(tc * bw + x, tr * bh + yy)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("tiled_reconstruct with 1x1 tiles equals the full reconstruction") {
  std::mt19937_64 rng(6);
  UnfoldModel<float> model = tiny_model(61);
  const VideoCube scene = testutil::random_video(12, 12, 2, rng);
  const MaskCube m = generate_masks(12, 12, 2, 72, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);
  const VideoCube full = reconstruct(model, y, m);
  const VideoCube tiled = tiled_reconstruct(model, y, m, 1, 1);
  CHECK(full.data == tiled.data);
}

TEST_CASE("tiled_reconstruct validates divisibility") {
  UnfoldModel<float> model = tiny_model(62);
  const MaskCube m = generate_masks(12, 12, 2, 73, MaskKind::binary);
  Measurement y(12, 12);
  CHECK_THROWS_AS(tiled_reconstruct(model, y, m, 0, 1), DimensionError);
  CHECK_THROWS_AS(tiled_reconstruct(model, y, m, 1, 5), DimensionError);  // 12 % 10 != 0
  CHECK_THROWS_AS(tiled_reconstruct(model, y, m, 5, 1), DimensionError);
}

TEST_CASE("eval_flexibility_masks is deterministic and labels conditions") {
  UnfoldModel<float> model = tiny_model(63);
  const auto scenes = synth_scenes(2, 12, 12, 2, ColorSpace::gray, 900);
  const MaskCube trained = generate_masks(12, 12, 2, 74, MaskKind::binary);
  const EvalReport a = eval_flexibility_masks(model, scenes, trained, 2, 555);
  const EvalReport b = eval_flexibility_masks(model, scenes, trained, 2, 555);
  REQUIRE(a.rows.size() == 6);  // (1 seen + 2 new) x 2 scenes
  CHECK(a.rows[0].condition == "seen-mask");
  CHECK(a.rows[2].condition == "new-mask-1");
  CHECK(a.rows[4].condition == "new-mask-2");
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].psnr == b.rows[i].psnr);
    CHECK(a.rows[i].ssim == b.rows[i].ssim);
  }
}

TEST_CASE("eval_flexibility_scale runs the model at a larger size") {
  UnfoldModel<float> model = tiny_model(64);
  const auto scenes = synth_scenes(2, 24, 24, 2, ColorSpace::gray, 901);
  const EvalReport r = eval_flexibility_scale(model, scenes, 75);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].condition == "scale-24x24");
  for (const auto& row : r.rows) CHECK(std::isfinite(row.psnr));
}
