#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "test_util.hpp"
#include "vcs/projection.hpp"
#include "vcs/sensing.hpp"

using namespace vcs;

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m.at(r, c);
  }
  return out;
}

// Independent projection route: x = v + Phi^T pinv(Phi Phi^T) (y - Phi v),
// everything dense through Eigen.
VideoCube dense_projection(const VideoCube& v, const Measurement& y, const MaskCube& m) {
  const Eigen::MatrixXd phi = to_eigen(dense_phi(m));
  const Eigen::MatrixXd q = phi * phi.transpose();
  Eigen::VectorXd vv = Eigen::Map<const Eigen::VectorXd>(vec_video(v).data(), phi.cols());
  Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(vec_measurement(y).data(), phi.rows());
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(q);
  const Eigen::VectorXd x = vv + phi.transpose() * cod.pseudoInverse() * (yv - phi * vv);
  std::vector<double> xs(x.data(), x.data() + x.size());
  return unvec_video(xs, m.w, m.h, m.t);
}

}  // namespace

TEST_CASE("q_diagonal counts active frames for binary masks") {
  const MaskCube m = generate_masks(5, 6, 4, 3, MaskKind::binary);
  const QDiagonal q = q_diagonal(m);
  for (int x = 0; x < 5; ++x) {
    for (int y = 0; y < 6; ++y) {
      double count = 0.0;
      for (int f = 0; f < 4; ++f) count += m.at(x, y, f);
      CHECK(q.at(x, y) == doctest::Approx(count));
    }
  }
}

TEST_CASE("q_diagonal of a constant 0.5 mask with T=4 is 1") {
  MaskCube m(3, 3, 4, MaskKind::continuous);
  std::fill(m.data.begin(), m.data.end(), 0.5);
  const QDiagonal q = q_diagonal(m);
  for (double v : q.q) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("q_diagonal equals the diagonal of dense Phi Phi^T") {
  const MaskCube m = generate_masks(4, 4, 3, 17, MaskKind::continuous);
  const Eigen::MatrixXd phi = to_eigen(dense_phi(m));
  const Eigen::MatrixXd qq = phi * phi.transpose();
  const QDiagonal q = q_diagonal(m);
  // Phi Phi^T must be exactly diagonal by construction
  for (int r = 0; r < qq.rows(); ++r) {
    for (int c = 0; c < qq.cols(); ++c) {
      if (r != c) CHECK(qq(r, c) == 0.0);
    }
  }
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) {
      const Eigen::Index i = static_cast<Eigen::Index>(vec_pixel_index(m, x, y));
      CHECK(q.at(x, y) == doctest::Approx(qq(i, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dense_phi structure") {
  SUBCASE("T=1 all-ones 2x2 mask gives the 4x4 identity") {
    MaskCube m(2, 2, 1, MaskKind::binary);
    std::fill(m.data.begin(), m.data.end(), 1.0);
    const DenseMatrix phi = dense_phi(m);
    REQUIRE(phi.rows == 4);
    REQUIRE(phi.cols == 4);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) CHECK(phi.at(r, c) == (r == c ? 1.0 : 0.0));
    }
  }
  SUBCASE("nonzeros live on the per-frame diagonal bands") {
    const MaskCube m = generate_masks(3, 3, 2, 5, MaskKind::continuous);
    const DenseMatrix phi = dense_phi(m);
    const std::size_t wh = 9;
    for (std::size_t r = 0; r < phi.rows; ++r) {
      for (std::size_t c = 0; c < phi.cols; ++c) {
        if (c % wh != r) CHECK(phi.at(r, c) == 0.0);
      }
    }
  }
  SUBCASE("capacity guard") {
    CHECK_THROWS_AS(dense_phi(MaskCube(256, 256, 2, MaskKind::binary)), CapacityError);
  }
}

TEST_CASE("gap_project fixed point: a consistent estimate is unchanged") {
  std::mt19937_64 rng(21);
  const MaskCube m = generate_masks(6, 6, 3, 8, MaskKind::binary);
  const VideoCube v = testutil::random_video(6, 6, 3, rng);
  const Measurement y = forward_measure(v, m, 0.0);  // Phi v = y exactly
  const VideoCube x = gap_project(v, y, m);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    CHECK(x.data[i] == doctest::Approx(v.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("gap_project with T=1 all-ones mask returns the measurement") {
  std::mt19937_64 rng(22);
  MaskCube m(5, 4, 1, MaskKind::binary);
  std::fill(m.data.begin(), m.data.end(), 1.0);
  const VideoCube v = testutil::random_video(5, 4, 1, rng);
  Measurement y(5, 4);
  std::uniform_real_distribution<double> uni(0, 1);
  for (double& val : y.data) val = uni(rng);
  const VideoCube x = gap_project(v, y, m);
  for (int xx = 0; xx < 5; ++xx) {
    for (int yy = 0; yy < 4; ++yy) {
      CHECK(x.at(xx, yy, 0) == doctest::Approx(y.at(xx, yy)).epsilon(1e-12));
    }
  }
}

TEST_CASE("gap_project matches the dense pseudo-inverse oracle") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> dim(2, 8);
  std::uniform_int_distribution<int> tdim(1, 4);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = dim(rng), h = dim(rng), t = tdim(rng);
    const MaskKind kind = trial % 2 == 0 ? MaskKind::binary : MaskKind::continuous;
    const MaskCube m = generate_masks(w, h, t, 500 + trial, kind);
    const VideoCube v = testutil::random_video(w, h, t, rng);
    const VideoCube truth = testutil::random_video(w, h, t, rng);
    const Measurement y = forward_measure(truth, m, 0.0);

    const VideoCube fast = gap_project(v, y, m);
    const VideoCube dense = dense_projection(v, y, m);
    for (std::size_t i = 0; i < fast.data.size(); ++i) {
      CHECK(std::abs(fast.data[i] - dense.data[i]) < 1e-5);
    }
  }
}

TEST_CASE("gap_project measurement consistency and idempotence") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 40; ++trial) {
    const MaskCube m = generate_masks(8, 8, 4, 900 + trial,
                                      trial % 2 == 0 ? MaskKind::binary : MaskKind::continuous);
    const VideoCube v = testutil::random_video(8, 8, 4, rng);
    const VideoCube truth = testutil::random_video(8, 8, 4, rng);
    const Measurement y = forward_measure(truth, m, 0.0);
    const QDiagonal q = q_diagonal(m);

    const VideoCube x = gap_project(v, y, m);
    for (int xx = 0; xx < 8; ++xx) {
      for (int yy = 0; yy < 8; ++yy) {
        if (q.at(xx, yy) <= kCoverageEps) continue;
        double acc = 0.0;
        for (int f = 0; f < 4; ++f) acc += m.at(xx, yy, f) * x.at(xx, yy, f);
        CHECK(std::abs(acc - y.at(xx, yy)) < 1e-5);
      }
    }

    const VideoCube xx2 = gap_project(x, y, m);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      CHECK(std::abs(xx2.data[i] - x.data[i]) < 1e-6);
    }
  }
}

TEST_CASE("gap_project is the minimal-move point of the affine set") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const MaskCube m = generate_masks(4, 4, 3, 40 + trial, MaskKind::binary);
    const VideoCube v = testutil::random_video(4, 4, 3, rng);
    const VideoCube truth = testutil::random_video(4, 4, 3, rng);
    const Measurement y = forward_measure(truth, m, 0.0);
    const VideoCube x = gap_project(v, y, m);

    const Eigen::MatrixXd phi = to_eigen(dense_phi(m));
    const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(phi).kernel();
    const Eigen::VectorXd xv =
        Eigen::Map<const Eigen::VectorXd>(vec_video(x).data(), phi.cols());
    const Eigen::VectorXd vv =
        Eigen::Map<const Eigen::VectorXd>(vec_video(v).data(), phi.cols());
    const Eigen::VectorXd yv =
        Eigen::Map<const Eigen::VectorXd>(vec_measurement(y).data(), phi.rows());
    CHECK((phi * xv - yv).norm() < 1e-8);  // x is feasible

    const double base = (xv - vv).norm();
    for (int probe = 0; probe < 8; ++probe) {
      Eigen::VectorXd xi(kernel.cols());
      for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = uni(rng);
      const Eigen::VectorXd z = xv + kernel * xi;
      CHECK((phi * z - yv).norm() < 1e-6);
      CHECK(base <= (z - vv).norm() + 1e-9);
    }
  }
}

TEST_CASE("gap_project rejects mismatched shapes") {
  const MaskCube m = generate_masks(4, 4, 2, 1, MaskKind::binary);
  const VideoCube v(4, 4, 3);
  Measurement y(4, 4);
  CHECK_THROWS_AS(gap_project(v, y, m), DimensionError);
  const VideoCube v2(4, 4, 2);
  Measurement y2(4, 3);
  CHECK_THROWS_AS(gap_project(v2, y2, m), DimensionError);
}
