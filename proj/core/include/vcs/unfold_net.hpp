#pragma once

#include <algorithm>
#include <utility>

#include "vcs/projection.hpp"
#include "vcs/reversible.hpp"
#include "vcs/sensing.hpp"
#include "vcs/vcub.hpp"

namespace vcs {

/// Architecture hyperparameters of the unfolding reconstructor.
struct UnfoldSpec {
  int stages = 2;    // J
  int channels = 16; // C, stem width; invertible blocks run at 2C
  int blocks = 4;    // K invertible blocks per stage
  ColorSpace mode = ColorSpace::gray;

  int c_in() const { return mode == ColorSpace::gray ? 2 : 1; }
  int c_out() const { return mode == ColorSpace::gray ? 1 : 3; }

  void validate() const {
    if (stages < 1) throw DimensionError("UnfoldSpec: stages must be >= 1");
    if (channels < 1) throw DimensionError("UnfoldSpec: channels must be >= 1");
    if (blocks < 1) throw DimensionError("UnfoldSpec: blocks must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// cube <-> tensor bridging ([C,T,H,W], gray C=1, rgb C=3)

template <class T>
Tensor<T> tensor_from_cube(const VideoCube& v) {
  const int c = v.channels();
  Tensor<T> out({c, v.t, v.h, v.w});
  for (int ch = 0; ch < c; ++ch) {
    for (int f = 0; f < v.t; ++f) {
      for (int y = 0; y < v.h; ++y) {
        for (int x = 0; x < v.w; ++x) {
          out.data[((static_cast<std::size_t>(ch) * v.t + f) * v.h + y) * v.w + x] =
              static_cast<T>(v.at(x, y, f, ch));
        }
      }
    }
  }
  return out;
}

template <class T>
VideoCube cube_from_tensor(const Tensor<T>& t) {
  if (t.ndim() != 4 || (t.shape[0] != 1 && t.shape[0] != 3)) {
    throw DimensionError("cube_from_tensor: expects [1|3,T,H,W], got " + t.shape_str());
  }
  const int c = t.shape[0], tt = t.shape[1], h = t.shape[2], w = t.shape[3];
  VideoCube v(w, h, tt, c == 3 ? ColorSpace::rgb : ColorSpace::gray);
  for (int ch = 0; ch < c; ++ch) {
    for (int f = 0; f < tt; ++f) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          v.at(x, y, f, ch) = static_cast<double>(
              t.data[((static_cast<std::size_t>(ch) * tt + f) * h + y) * w + x]);
        }
      }
    }
  }
  return v;
}

template <class T>
Tensor<T> tensor_from_mask(const MaskCube& m) {
  Tensor<T> out({1, m.t, m.h, m.w});
  for (int f = 0; f < m.t; ++f) {
    for (int y = 0; y < m.h; ++y) {
      for (int x = 0; x < m.w; ++x) {
        out.data[(static_cast<std::size_t>(f) * m.h + y) * m.w + x] =
            static_cast<T>(m.at(x, y, f));
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> tensor_from_plane(const std::vector<double>& plane, int w, int h) {
  Tensor<T> out({1, 1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.data[static_cast<std::size_t>(y) * w + x] =
          static_cast<T>(plane[static_cast<std::size_t>(x) * h + y]);
    }
  }
  return out;
}

/// Precomputes the tensors the projection op needs from one (y, mask) pair.
template <class T>
SensingSystem<T> prepare_system(const Measurement& y, const MaskCube& m) {
  require_same_shape(y, m, "prepare_system");
  SensingSystem<T> sys;
  sys.mask = tensor_from_mask<T>(m);
  sys.y = tensor_from_plane<T>(y.data, y.w, y.h);
  const QDiagonal q = q_diagonal(m);
  std::vector<double> qinv(q.q.size(), 0.0);
  for (std::size_t i = 0; i < q.q.size(); ++i) {
    if (q.q[i] > kCoverageEps) qinv[i] = 1.0 / q.q[i];
  }
  sys.qinv = tensor_from_plane<T>(qinv, q.w, q.h);
  return sys;
}

/// Plain (no-tape) projection on [1,T,H,W] tensors; mirrors op_gap_project.
template <class T>
Tensor<T> gap_project_tensor(const Tensor<T>& v, const SensingSystem<T>& sys) {
  require_same_shape(v, sys.mask, "gap_project_tensor");
  const int tdim = v.shape[1];
  const std::size_t plane = static_cast<std::size_t>(v.shape[2]) * v.shape[3];
  Tensor<T> out(v.shape);
  for (std::size_t i = 0; i < plane; ++i) {
    T residual = sys.y.data[i];
    for (int f = 0; f < tdim; ++f) {
      residual -= sys.mask.data[f * plane + i] * v.data[f * plane + i];
    }
    const T r = residual * sys.qinv.data[i];
    for (int f = 0; f < tdim; ++f) {
      out.data[f * plane + i] = v.data[f * plane + i] + sys.mask.data[f * plane + i] * r;
    }
  }
  return out;
}

/// Plain RGGB sampling of a [3,T,H,W] tensor; mirrors op_bayer_mosaic.
template <class T>
Tensor<T> bayer_mosaic_tensor(const Tensor<T>& rgb) {
  if (rgb.ndim() != 4 || rgb.shape[0] != 3) {
    throw DimensionError("bayer_mosaic_tensor: expects [3,T,H,W], got " + rgb.shape_str());
  }
  const int tdim = rgb.shape[1], hdim = rgb.shape[2], wdim = rgb.shape[3];
  const std::size_t plane = static_cast<std::size_t>(hdim) * wdim;
  const std::size_t chan = static_cast<std::size_t>(tdim) * plane;
  Tensor<T> out({1, tdim, hdim, wdim});
  for (int f = 0; f < tdim; ++f) {
    for (int h = 0; h < hdim; ++h) {
      for (int w = 0; w < wdim; ++w) {
        const int c = h % 2 == 0 ? (w % 2 == 0 ? 0 : 1) : (w % 2 == 0 ? 1 : 2);
        out.data[f * plane + h * static_cast<std::size_t>(wdim) + w] =
            rgb.data[c * chan + f * plane + h * static_cast<std::size_t>(wdim) + w];
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> concat_tensors(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != 4 || b.ndim() != 4) throw DimensionError("concat_tensors: expects 4D");
  for (int d = 1; d < 4; ++d) {
    if (a.shape[d] != b.shape[d]) {
      throw DimensionError("concat_tensors: trailing dims differ, " + a.shape_str() + " vs " +
                           b.shape_str());
    }
  }
  std::vector<int> shape = a.shape;
  shape[0] += b.shape[0];
  Tensor<T> out(shape);
  std::copy_n(a.data.data(), a.numel(), out.data.data());
  std::copy_n(b.data.data(), b.numel(), out.data.data() + a.numel());
  return out;
}

// ---------------------------------------------------------------------------

/// One unfolding stage's denoising network: conv stem, one stride-(1,2,2)
/// down level, K invertible blocks at 2C channels, nearest-neighbor up with a
/// conv, and a linear head.
template <class T>
struct StageNet {
  Conv3dLayer<T> stem, down, up, head;
  std::vector<InvertibleBlock<T>> inv_blocks;
  T slope = T(0.01);

  void init(const UnfoldSpec& spec, std::mt19937_64& rng) {
    const int c = spec.channels;
    stem.init(spec.c_in(), c, rng);
    down.init(c, 2 * c, rng, false, Conv3dSpec{1, 2, 2, 1, 1, 1});
    inv_blocks.resize(spec.blocks);
    for (auto& blk : inv_blocks) blk.init(c, rng);
    up.init(2 * c, c, rng);
    head.init(c, spec.c_out(), rng);
  }

  void check_input(const Tensor<T>& x) const {
    if (x.ndim() != 4) throw DimensionError("StageNet: expects [C,T,H,W]");
    if (x.shape[2] % 2 != 0 || x.shape[3] % 2 != 0) {
      throw DimensionError("StageNet: H and W must be divisible by 2, got " + x.shape_str());
    }
  }

  Tensor<T> eval(const Tensor<T>& x) const {
    check_input(x);
    Tensor<T> h = leaky_relu_forward(stem.eval(x), slope);
    h = leaky_relu_forward(down.eval(h), slope);
    {
      auto [s1, s2] = detail::split_halves(h);
      for (const auto& blk : inv_blocks) {
        auto [n1, n2] = invertible_forward(blk, s1, s2);
        s1 = std::move(n1);
        s2 = std::move(n2);
      }
      h = detail::join_halves(s1, s2);
    }
    h = leaky_relu_forward(up.eval(upsample2x_forward(h)), slope);
    return head.eval(h);
  }

  /// Training graph; the invertible chain goes through the memory-free op.
  int build(Tape<T>& tape, int x) {
    check_input(tape.val(x));
    int h = op_leaky_relu(tape, stem.build(tape, x), slope);
    h = op_leaky_relu(tape, down.build(tape, h), slope);
    std::vector<InvertibleBlock<T>*> ptrs;
    ptrs.reserve(inv_blocks.size());
    for (auto& blk : inv_blocks) ptrs.push_back(&blk);
    h = op_reversible_chain(tape, h, ptrs);
    h = op_leaky_relu(tape, up.build(tape, op_upsample2x(tape, h)), slope);
    return head.build(tape, h);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    stem.collect(out);
    down.collect(out);
    for (auto& blk : inv_blocks) blk.collect(out);
    up.collect(out);
    head.collect(out);
  }
};

/// The J-stage unfolding model. Stage architectures are identical, parameters
/// independent.
template <class T>
struct UnfoldModel {
  UnfoldSpec spec;
  std::vector<StageNet<T>> stages;

  static UnfoldModel create(const UnfoldSpec& spec, std::uint64_t seed) {
    spec.validate();
    UnfoldModel m;
    m.spec = spec;
    m.stages.resize(spec.stages);
    std::mt19937_64 rng(seed);
    for (auto& s : m.stages) s.init(spec, rng);
    return m;
  }

  std::vector<Parameter<T>*> params() {
    std::vector<Parameter<T>*> out;
    for (auto& s : stages) s.collect(out);
    return out;
  }

  std::vector<Parameter<T>*> stage_params(int j) {
    std::vector<Parameter<T>*> out;
    stages.at(j).collect(out);
    return out;
  }

  void set_stage_trainable(int j, bool trainable) {
    for (Parameter<T>* p : stage_params(j)) p->trainable = trainable;
  }
};

template <class T>
struct ReconResult {
  VideoCube output;                       // final estimate, clipped to [0,1]
  std::vector<VideoCube> stage_outputs;   // unclipped v^(j), j = 1..J
};

/// One grayscale stage: GAP projection of the running estimate, then the
/// denoising network on [projected cube, RMF] stacked as two channels.
template <class T>
Tensor<T> stage_forward_tensor(const StageNet<T>& stage, const Tensor<T>& v_prev,
                               const SensingSystem<T>& sys, const Tensor<T>& rmf) {
  Tensor<T> x = gap_project_tensor(v_prev, sys);
  return stage.eval(concat_tensors(x, rmf));
}

template <class T>
VideoCube stage_forward_gray(const StageNet<T>& stage, const VideoCube& v_prev,
                             const Measurement& y, const MaskCube& m, const RefFrames& xr) {
  SensingSystem<T> sys = prepare_system<T>(y, m);
  Tensor<T> rmf = tensor_from_cube<T>(xr.rmf);
  Tensor<T> out = stage_forward_tensor(stage, tensor_from_cube<T>(v_prev), sys, rmf);
  return cube_from_tensor(out);
}

template <class T>
ReconResult<T> reconstruct_gray(const UnfoldModel<T>& model, const Measurement& y,
                                const MaskCube& m) {
  if (model.spec.mode != ColorSpace::gray) {
    throw DimensionError("reconstruct_gray: model is not a grayscale model");
  }
  SensingSystem<T> sys = prepare_system<T>(y, m);
  const RefFrames xr = reference_frames(y, m);
  Tensor<T> rmf = tensor_from_cube<T>(xr.rmf);
  Tensor<T> v = rmf;

  ReconResult<T> result;
  for (const auto& stage : model.stages) {
    v = stage_forward_tensor(stage, v, sys, rmf);
    result.stage_outputs.push_back(cube_from_tensor(v));
  }
  result.output = result.stage_outputs.back();
  for (double& val : result.output.data) val = std::clamp(val, 0.0, 1.0);
  return result;
}

/// Color path: the mosaicked estimate is projected, each stage emits RGB, and
/// the stage output is re-sampled through the Bayer pattern before the next
/// projection. No RMF fusion.
template <class T>
ReconResult<T> reconstruct_color(const UnfoldModel<T>& model, const Measurement& y,
                                 const MaskCube& m) {
  if (model.spec.mode != ColorSpace::rgb) {
    throw DimensionError("reconstruct_color: model is not a color model");
  }
  if (m.w % 2 != 0 || m.h % 2 != 0) {
    throw DimensionError("reconstruct_color: W and H must be even, got " + shape_string(m));
  }
  SensingSystem<T> sys = prepare_system<T>(y, m);
  const RefFrames xr = reference_frames(y, m);
  Tensor<T> v_mosaic = tensor_from_cube<T>(xr.rmf);

  ReconResult<T> result;
  for (std::size_t j = 0; j < model.stages.size(); ++j) {
    Tensor<T> x = gap_project_tensor(v_mosaic, sys);
    Tensor<T> v_rgb = model.stages[j].eval(x);
    result.stage_outputs.push_back(cube_from_tensor(v_rgb));
    if (j + 1 < model.stages.size()) v_mosaic = bayer_mosaic_tensor(v_rgb);
  }
  result.output = result.stage_outputs.back();
  for (double& val : result.output.data) val = std::clamp(val, 0.0, 1.0);
  return result;
}

/// Builds the training graph for stages [from_stage, to_stage]. v0 and rmf
/// are existing tape nodes; returns the node ids of every built stage output.
template <class T>
std::vector<int> build_gray_stages(Tape<T>& tape, UnfoldModel<T>& model,
                                   const SensingSystem<T>& sys, int v0, int rmf, int from_stage,
                                   int to_stage) {
  const int mask = tape.constant_ref(&sys.mask);
  const int y = tape.constant_ref(&sys.y);
  const int qinv = tape.constant_ref(&sys.qinv);
  std::vector<int> outputs;
  int v = v0;
  for (int j = from_stage; j <= to_stage; ++j) {
    const int x = op_gap_project(tape, v, mask, y, qinv);
    const int input = op_concat_channels(tape, std::vector<int>{x, rmf});
    v = model.stages.at(j).build(tape, input);
    outputs.push_back(v);
  }
  return outputs;
}

template <class T>
std::vector<int> build_color_stages(Tape<T>& tape, UnfoldModel<T>& model,
                                    const SensingSystem<T>& sys, int v0_mosaic, int from_stage,
                                    int to_stage) {
  const int mask = tape.constant_ref(&sys.mask);
  const int y = tape.constant_ref(&sys.y);
  const int qinv = tape.constant_ref(&sys.qinv);
  std::vector<int> outputs;
  int v = v0_mosaic;
  for (int j = from_stage; j <= to_stage; ++j) {
    const int x = op_gap_project(tape, v, mask, y, qinv);
    const int rgb = model.stages.at(j).build(tape, x);
    outputs.push_back(rgb);
    if (j < to_stage) v = op_bayer_mosaic(tape, rgb);
  }
  return outputs;
}

// ---------------------------------------------------------------------------
// Checkpoints: a VCUB container with an "arch" record [J, C, K, mode] and one
// record per parameter tensor.

template <class T>
void save_model(const std::string& path, const UnfoldModel<T>& model);

template <class T>
UnfoldModel<T> load_model(const std::string& path);

namespace detail {

template <class T, class Fn>
void for_each_param(StageNet<T>& stage, int stage_idx, Fn&& fn) {
  const std::string prefix = "stage" + std::to_string(stage_idx) + ".";
  fn(prefix + "stem.w", stage.stem.w);
  fn(prefix + "stem.b", stage.stem.b);
  fn(prefix + "down.w", stage.down.w);
  fn(prefix + "down.b", stage.down.b);
  for (std::size_t k = 0; k < stage.inv_blocks.size(); ++k) {
    const std::string bp = prefix + "block" + std::to_string(k) + ".";
    fn(bp + "f.conv1.w", stage.inv_blocks[k].f.conv1.w);
    fn(bp + "f.conv1.b", stage.inv_blocks[k].f.conv1.b);
    fn(bp + "f.conv2.w", stage.inv_blocks[k].f.conv2.w);
    fn(bp + "f.conv2.b", stage.inv_blocks[k].f.conv2.b);
    fn(bp + "g.conv1.w", stage.inv_blocks[k].g.conv1.w);
    fn(bp + "g.conv1.b", stage.inv_blocks[k].g.conv1.b);
    fn(bp + "g.conv2.w", stage.inv_blocks[k].g.conv2.w);
    fn(bp + "g.conv2.b", stage.inv_blocks[k].g.conv2.b);
  }
  fn(prefix + "up.w", stage.up.w);
  fn(prefix + "up.b", stage.up.b);
  fn(prefix + "head.w", stage.head.w);
  fn(prefix + "head.b", stage.head.b);
}

}  // namespace detail

template <class T>
void save_model(const std::string& path, const UnfoldModel<T>& model) {
  VcubFile file;
  const double arch[4] = {static_cast<double>(model.spec.stages),
                          static_cast<double>(model.spec.channels),
                          static_cast<double>(model.spec.blocks),
                          model.spec.mode == ColorSpace::rgb ? 1.0 : 0.0};
  file.add(VcubRecord::make_f64("arch", {4}, arch));
  auto& stages = const_cast<UnfoldModel<T>&>(model).stages;
  for (std::size_t j = 0; j < stages.size(); ++j) {
    detail::for_each_param(stages[j], static_cast<int>(j),
                           [&](const std::string& name, Parameter<T>& p) {
                             std::vector<std::uint32_t> dims(p.value.shape.begin(),
                                                             p.value.shape.end());
                             if constexpr (sizeof(T) == 4) {
                               file.add(VcubRecord::make_f32(name, std::move(dims),
                                                             p.value.data.data()));
                             } else {
                               file.add(VcubRecord::make_f64(name, std::move(dims),
                                                             p.value.data.data()));
                             }
                           });
  }
  vcub_write(path, file);
}

template <class T>
UnfoldModel<T> load_model(const std::string& path) {
  const VcubFile file = vcub_read(path);
  const std::vector<double> arch = file.require("arch").as_f64();
  if (arch.size() != 4) throw ParseError("checkpoint: \"arch\" must have 4 entries");
  UnfoldSpec spec;
  spec.stages = static_cast<int>(arch[0]);
  spec.channels = static_cast<int>(arch[1]);
  spec.blocks = static_cast<int>(arch[2]);
  spec.mode = arch[3] != 0.0 ? ColorSpace::rgb : ColorSpace::gray;
  UnfoldModel<T> model = UnfoldModel<T>::create(spec, 0);
  for (std::size_t j = 0; j < model.stages.size(); ++j) {
    detail::for_each_param(
        model.stages[j], static_cast<int>(j), [&](const std::string& name, Parameter<T>& p) {
          const VcubRecord& rec = file.require(name);
          if (rec.numel() != p.value.numel()) {
            throw ParseError("checkpoint: record \"" + name + "\" has " +
                             std::to_string(rec.numel()) + " values, expected " +
                             std::to_string(p.value.numel()));
          }
          if constexpr (sizeof(T) == 4) {
            const std::vector<float> vals = rec.as_f32();
            std::copy(vals.begin(), vals.end(), p.value.data.begin());
          } else {
            const std::vector<double> vals = rec.as_f64();
            std::copy(vals.begin(), vals.end(), p.value.data.begin());
          }
        });
  }
  return model;
}

}  // namespace vcs
