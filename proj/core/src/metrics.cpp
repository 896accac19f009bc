#include "vcs/metrics.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace vcs {

double psnr(const VideoCube& x, const VideoCube& ref) {
  if (x.w != ref.w || x.h != ref.h || x.t != ref.t || x.colorspace != ref.colorspace) {
    throw DimensionError("psnr: shape mismatch " + shape_string(x) + " vs " + shape_string(ref));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = x.data[i] - ref.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(x.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2
constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2

const std::vector<double>& gaussian_taps() {
  static const std::vector<double> taps = [] {
    std::vector<double> t(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - (kWindow - 1) / 2.0;
      t[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

// separable valid-mode Gaussian filter of a plane indexed x*h + y
std::vector<double> gauss_valid(const std::vector<double>& img, int w, int h, int& ow, int& oh) {
  const auto& taps = gaussian_taps();
  ow = w - kWindow + 1;
  oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h, 0.0);  // filtered along x
  for (int x = 0; x < ow; ++x) {
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * img[static_cast<std::size_t>(x + k) * h + y];
      tmp[static_cast<std::size_t>(x) * h + y] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
  for (int x = 0; x < ow; ++x) {
    for (int y = 0; y < oh; ++y) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * tmp[static_cast<std::size_t>(x) * h + y + k];
      out[static_cast<std::size_t>(x) * oh + y] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim_frame(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
  if (w < kWindow || h < kWindow) {
    throw DimensionError("ssim: frame smaller than the 11x11 window");
  }
  if (a.size() != static_cast<std::size_t>(w) * h || b.size() != a.size()) {
    throw DimensionError("ssim: plane size mismatch");
  }
  const std::size_t n = a.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  int ow = 0, oh = 0;
  const std::vector<double> mu_a = gauss_valid(a, w, h, ow, oh);
  const std::vector<double> mu_b = gauss_valid(b, w, h, ow, oh);
  const std::vector<double> e_aa = gauss_valid(aa, w, h, ow, oh);
  const std::vector<double> e_bb = gauss_valid(bb, w, h, ow, oh);
  const std::vector<double> e_ab = gauss_valid(ab, w, h, ow, oh);

  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
           ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
  }
  return acc / static_cast<double>(mu_a.size());
}

double ssim(const VideoCube& x, const VideoCube& ref) {
  if (x.w != ref.w || x.h != ref.h || x.t != ref.t || x.colorspace != ref.colorspace) {
    throw DimensionError("ssim: shape mismatch " + shape_string(x) + " vs " + shape_string(ref));
  }
  const int channels = x.channels();
  std::vector<double> pa(static_cast<std::size_t>(x.w) * x.h);
  std::vector<double> pb(pa.size());
  double acc = 0.0;
  for (int f = 0; f < x.t; ++f) {
    for (int c = 0; c < channels; ++c) {
      for (int xx = 0; xx < x.w; ++xx) {
        for (int yy = 0; yy < x.h; ++yy) {
          pa[static_cast<std::size_t>(xx) * x.h + yy] = x.at(xx, yy, f, c);
          pb[static_cast<std::size_t>(xx) * x.h + yy] = ref.at(xx, yy, f, c);
        }
      }
      acc += ssim_frame(pa, pb, x.w, x.h);
    }
  }
  return acc / static_cast<double>(x.t * channels);
}

std::vector<EvalReport::ConditionAverage> EvalReport::averages() const {
  std::vector<ConditionAverage> avgs;
  for (const EvalRow& row : rows) {
    ConditionAverage* slot = nullptr;
    for (auto& a : avgs) {
      if (a.condition == row.condition) slot = &a;
    }
    if (slot == nullptr) {
      avgs.push_back({row.condition, 0.0, 0.0, 0.0, 0});
      slot = &avgs.back();
    }
    slot->psnr += row.psnr;
    slot->ssim += row.ssim;
    slot->seconds += row.seconds;
    slot->count += 1;
  }
  for (auto& a : avgs) {
    a.psnr /= a.count;
    a.ssim /= a.count;
    a.seconds /= a.count;
  }
  return avgs;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "condition,scene,psnr_db,ssim,seconds\n";
  os << std::setprecision(10);
  for (const EvalRow& r : rows) {
    os << r.condition << "," << r.scene << "," << r.psnr << "," << r.ssim << "," << r.seconds
       << "\n";
  }
  return os.str();
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(16) << "condition" << std::right << std::setw(10) << "psnr(dB)"
     << std::setw(9) << "ssim" << std::setw(12) << "sec/meas" << std::setw(8) << "scenes"
     << "\n";
  for (const auto& a : averages()) {
    os << std::left << std::setw(16) << a.condition << std::right << std::fixed
       << std::setprecision(2) << std::setw(10) << a.psnr << std::setprecision(4) << std::setw(9)
       << a.ssim << std::setprecision(3) << std::setw(12) << a.seconds << std::setw(8) << a.count
       << "\n";
    os.unsetf(std::ios::fixed);
    os << std::setprecision(6);
  }
  return os.str();
}

VideoCube reconstruct(const UnfoldModel<float>& model, const Measurement& y, const MaskCube& m) {
  if (model.spec.mode == ColorSpace::rgb) return reconstruct_color(model, y, m).output;
  return reconstruct_gray(model, y, m).output;
}

namespace {

VideoCube clipped(VideoCube v) {
  for (double& x : v.data) x = std::clamp(x, 0.0, 1.0);
  return v;
}

void eval_condition(const UnfoldModel<float>& model, const std::vector<VideoCube>& scenes,
                    const MaskCube& mask, const std::string& condition, EvalReport& report) {
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const VideoCube& scene = scenes[i];
    const Measurement y = scene.colorspace == ColorSpace::rgb
                              ? forward_measure_color(scene, mask, 0.0)
                              : forward_measure(scene, mask, 0.0);
    const auto t0 = std::chrono::steady_clock::now();
    const VideoCube rec = reconstruct(model, y, mask);
    const auto t1 = std::chrono::steady_clock::now();
    EvalRow row;
    row.condition = condition;
    row.scene = static_cast<int>(i);
    row.psnr = psnr(rec, clipped(scene));
    row.ssim = ssim(rec, clipped(scene));
    row.seconds = std::chrono::duration<double>(t1 - t0).count();
    report.rows.push_back(row);
  }
}

}  // namespace

EvalReport eval_flexibility_masks(const UnfoldModel<float>& model,
                                  const std::vector<VideoCube>& scenes,
                                  const MaskCube& trained_mask, int n_new, std::uint64_t seed) {
  EvalReport report;
  eval_condition(model, scenes, trained_mask, "seen-mask", report);
  for (int i = 1; i <= n_new; ++i) {
    const MaskCube fresh = generate_masks(trained_mask.w, trained_mask.h, trained_mask.t,
                                          seed + static_cast<std::uint64_t>(i), trained_mask.kind);
    eval_condition(model, scenes, fresh, "new-mask-" + std::to_string(i), report);
  }
  return report;
}

EvalReport eval_flexibility_scale(const UnfoldModel<float>& model,
                                  const std::vector<VideoCube>& scenes, std::uint64_t mask_seed) {
  if (scenes.empty()) return {};
  const VideoCube& first = scenes.front();
  if (first.w % 2 != 0 || first.h % 2 != 0) {
    throw DimensionError("eval_flexibility_scale: scene dims must be divisible by 2");
  }
  const MaskCube mask =
      generate_masks(first.w, first.h, first.t, mask_seed, MaskKind::binary);
  EvalReport report;
  eval_condition(model, scenes, mask,
                 "scale-" + std::to_string(first.w) + "x" + std::to_string(first.h), report);
  return report;
}

VideoCube tiled_reconstruct(
    const std::function<VideoCube(const Measurement&, const MaskCube&)>& recon,
    const Measurement& y, const MaskCube& m, int tile_rows, int tile_cols) {
  require_same_shape(y, m, "tiled_reconstruct");
  if (tile_rows < 1 || tile_cols < 1) {
    throw DimensionError("tiled_reconstruct: tile counts must be >= 1");
  }
  if (m.w % (tile_cols * 2) != 0 || m.h % (tile_rows * 2) != 0) {
    throw DimensionError("tiled_reconstruct: W must divide by 2*cols and H by 2*rows, got " +
                         shape_string(m) + " with " + std::to_string(tile_rows) + "x" +
                         std::to_string(tile_cols) + " tiles");
  }
  const int bw = m.w / tile_cols;
  const int bh = m.h / tile_rows;
  VideoCube out;

  for (int tr = 0; tr < tile_rows; ++tr) {
    for (int tc = 0; tc < tile_cols; ++tc) {
      const int x0 = tc * bw;
      const int y0 = tr * bh;
      MaskCube bm(bw, bh, m.t, m.kind);
      Measurement by(bw, bh);
      for (int x = 0; x < bw; ++x) {
        for (int yy = 0; yy < bh; ++yy) {
          by.at(x, yy) = y.at(x0 + x, y0 + yy);
          for (int f = 0; f < m.t; ++f) bm.at(x, yy, f) = m.at(x0 + x, y0 + yy, f);
        }
      }
      const VideoCube block = recon(by, bm);
      if (out.data.empty()) out = VideoCube(m.w, m.h, m.t, block.colorspace);
      for (int x = 0; x < bw; ++x) {
        for (int yy = 0; yy < bh; ++yy) {
          for (int f = 0; f < m.t; ++f) {
            for (int c = 0; c < out.channels(); ++c) {
              out.at(x0 + x, y0 + yy, f, c) = block.at(x, yy, f, c);
            }
          }
        }
      }
    }
  }
  return out;
}

VideoCube tiled_reconstruct(const UnfoldModel<float>& model, const Measurement& y,
                            const MaskCube& m, int tile_rows, int tile_cols) {
  return tiled_reconstruct(
      [&model](const Measurement& by, const MaskCube& bm) { return reconstruct(model, by, bm); },
      y, m, tile_rows, tile_cols);
}

}  // namespace vcs
