#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "test_util.hpp"
#include "vcs/training.hpp"
#include "vcs/unfold_net.hpp"

using namespace vcs;

namespace {

template <class T>
std::vector<Tensor<T>> snapshot_params(UnfoldModel<T>& model) {
  std::vector<Tensor<T>> out;
  for (Parameter<T>* p : model.params()) out.push_back(p->value);
  return out;
}

}  // namespace

TEST_CASE("cube/tensor bridge roundtrips") {
  std::mt19937_64 rng(1);
  const VideoCube gray = testutil::random_video(6, 4, 3, rng);
  CHECK(cube_from_tensor(tensor_from_cube<double>(gray)).data == gray.data);
  const VideoCube rgb = testutil::random_video(6, 4, 3, rng, ColorSpace::rgb);
  const VideoCube back = cube_from_tensor(tensor_from_cube<double>(rgb));
  CHECK(back.colorspace == ColorSpace::rgb);
  CHECK(back.data == rgb.data);
}

TEST_CASE("zero-initialized head makes a stage emit zeros") {
  std::mt19937_64 rng(2);
  UnfoldSpec spec{1, 4, 1, ColorSpace::gray};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 3);
  model.stages[0].head.w.value.fill(0.0f);
  model.stages[0].head.b.value.fill(0.0f);

  const VideoCube scene = testutil::random_video(8, 8, 2, rng);
  const MaskCube m = generate_masks(8, 8, 2, 5, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);
  const auto rec = reconstruct_gray(model, y, m);
  for (double v : rec.stage_outputs[0].data) CHECK(v == 0.0);
}

TEST_CASE("stage output shape equals the video shape; odd dims are rejected") {
  std::mt19937_64 rng(3);
  UnfoldSpec spec{2, 4, 2, ColorSpace::gray};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 7);

  const VideoCube scene = testutil::random_video(12, 10, 3, rng);
  const MaskCube m = generate_masks(12, 10, 3, 6, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);
  const auto rec = reconstruct_gray(model, y, m);
  REQUIRE(rec.stage_outputs.size() == 2);
  CHECK(rec.output.w == 12);
  CHECK(rec.output.h == 10);
  CHECK(rec.output.t == 3);
  for (double v : rec.output.data) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  const MaskCube odd = generate_masks(9, 10, 3, 6, MaskKind::binary);
  const VideoCube odd_scene = testutil::random_video(9, 10, 3, rng);
  const Measurement oy = forward_measure(odd_scene, odd, 0.0);
  CHECK_THROWS_AS(reconstruct_gray(model, oy, odd), DimensionError);
}

TEST_CASE("J=1 reconstruction equals one stage_forward_gray on the RMF") {
  std::mt19937_64 rng(4);
  UnfoldSpec spec{1, 4, 1, ColorSpace::gray};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 11);
  const VideoCube scene = testutil::random_video(8, 6, 2, rng);
  const MaskCube m = generate_masks(8, 6, 2, 8, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);

  const auto rec = reconstruct_gray(model, y, m);
  const RefFrames xr = reference_frames(y, m);
  const VideoCube direct = stage_forward_gray(model.stages[0], xr.rmf, y, m, xr);
  CHECK(rec.stage_outputs[0].data == direct.data);
}

TEST_CASE("reconstruction does not mutate the model (mask-agnostic interface)") {
  std::mt19937_64 rng(5);
  UnfoldSpec spec{2, 4, 1, ColorSpace::gray};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 13);
  const auto before = snapshot_params(model);

  const VideoCube scene = testutil::random_video(8, 8, 2, rng);
  for (std::uint64_t seed : {100, 200, 300}) {
    const MaskCube m = generate_masks(8, 8, 2, seed, MaskKind::binary);
    const Measurement y = forward_measure(scene, m, 0.0);
    const auto rec = reconstruct_gray(model, y, m);
    for (double v : rec.output.data) CHECK(std::isfinite(v));
  }
  const auto after = snapshot_params(model);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i].data == after[i].data);
}

TEST_CASE("a model runs unmodified at twice the spatial size") {
  std::mt19937_64 rng(6);
  UnfoldSpec spec{2, 4, 1, ColorSpace::gray};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 17);
  const VideoCube big = testutil::random_video(16, 16, 2, rng);
  const MaskCube m = generate_masks(16, 16, 2, 9, MaskKind::binary);
  const Measurement y = forward_measure(big, m, 0.0);
  const auto rec = reconstruct_gray(model, y, m);
  CHECK(rec.output.w == 16);
  CHECK(rec.output.h == 16);
  for (double v : rec.output.data) CHECK(std::isfinite(v));
}

TEST_CASE("color path: zero heads give zero output, shapes are rgb") {
  std::mt19937_64 rng(7);
  UnfoldSpec spec{2, 4, 1, ColorSpace::rgb};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 19);
  for (auto& stage : model.stages) {
    stage.head.w.value.fill(0.0f);
    stage.head.b.value.fill(0.0f);
  }
  const VideoCube scene = testutil::random_video(8, 8, 2, rng, ColorSpace::rgb);
  const MaskCube m = generate_masks(8, 8, 2, 10, MaskKind::binary);
  const Measurement y = forward_measure_color(scene, m, 0.0);
  const auto rec = reconstruct_color(model, y, m);
  CHECK(rec.output.colorspace == ColorSpace::rgb);
  CHECK(rec.stage_outputs.size() == 2);
  for (double v : rec.output.data) CHECK(v == 0.0);

  const MaskCube odd = generate_masks(6, 7, 2, 10, MaskKind::binary);
  Measurement oy(6, 7);
  CHECK_THROWS_AS(reconstruct_color(model, oy, odd), DimensionError);
}

TEST_CASE("color path: untrained model yields finite rgb output") {
  std::mt19937_64 rng(8);
  UnfoldSpec spec{2, 4, 2, ColorSpace::rgb};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 23);
  const VideoCube scene = testutil::random_video(8, 8, 3, rng, ColorSpace::rgb);
  const MaskCube m = generate_masks(8, 8, 3, 11, MaskKind::binary);
  const Measurement y = forward_measure_color(scene, m, 0.0);
  const auto rec = reconstruct_color(model, y, m);
  CHECK(rec.output.w == 8);
  CHECK(rec.output.t == 3);
  for (double v : rec.output.data) CHECK(std::isfinite(v));
}

TEST_CASE("end-to-end gradcheck of a tiny 2-stage model (f64)") {
  std::mt19937_64 rng(9);
  UnfoldSpec spec{2, 4, 1, ColorSpace::gray};
  UnfoldModel<double> model = UnfoldModel<double>::create(spec, 29);
  // random closing convs so the invertible blocks are not identities
  for (auto& stage : model.stages) {
    for (auto& blk : stage.inv_blocks) {
      blk.f.conv2.w.value.fill_randn(rng, 0.05);
      blk.g.conv2.w.value.fill_randn(rng, 0.05);
    }
  }

  const VideoCube scene = testutil::random_video(8, 8, 2, rng);
  const MaskCube m = generate_masks(8, 8, 2, 12, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);
  const SensingSystem<double> sys = prepare_system<double>(y, m);
  const Tensor<double> rmf = tensor_from_cube<double>(reference_frames(y, m).rmf);
  const Tensor<double> truth = tensor_from_cube<double>(scene);

  auto loss_fn = [&]() {
    Tensor<double> v = rmf;
    std::vector<double> losses;
    for (auto& stage : model.stages) {
      v = stage.eval(concat_tensors(gap_project_tensor(v, sys), rmf));
      double acc = 0.0;
      for (std::size_t i = 0; i < v.numel(); ++i) {
        const double d = v.data[i] - truth.data[i];
        acc += d * d;
      }
      losses.push_back(acc / static_cast<double>(v.numel()));
    }
    return 0.5 * losses[0] + losses[1];
  };

  for (Parameter<double>* p : model.params()) p->zero_grad();
  Tape<double> tape;
  const int v0 = tape.constant(rmf);
  const int rmf_id = tape.constant_ref(&rmf);
  const auto outs = build_gray_stages(tape, model, sys, v0, rmf_id, 0, 1);
  const int truth_id = tape.constant_ref(&truth);
  const int loss =
      op_axpy(tape, 0.5, op_mse(tape, outs[0], truth_id), op_mse(tape, outs[1], truth_id));
  tape.backward(loss);
  CHECK(tape.val(loss).data[0] == doctest::Approx(loss_fn()).epsilon(1e-12));

  double worst = 0.0;
  for (Parameter<double>* p : model.params()) {
    const int probes = p->value.numel() > 64 ? 6 : 2;
    worst = std::max(worst, testutil::fd_check<double>(p->value, p->grad, loss_fn, probes, rng));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("checkpoint save/load roundtrip preserves parameters bitwise") {
  std::mt19937_64 rng(10);
  UnfoldSpec spec{2, 4, 2, ColorSpace::gray};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 31);
  const std::string path = (std::filesystem::temp_directory_path() / "vcs_ckpt_test.vcub").string();
  save_model(path, model);
  UnfoldModel<float> loaded = load_model<float>(path);
  CHECK(loaded.spec.stages == 2);
  CHECK(loaded.spec.channels == 4);
  CHECK(loaded.spec.blocks == 2);
  CHECK(loaded.spec.mode == ColorSpace::gray);

  auto a = snapshot_params(model);
  auto b = snapshot_params(loaded);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].data == b[i].data);

  // identical reconstructions
  const VideoCube scene = testutil::random_video(8, 8, 2, rng);
  const MaskCube m = generate_masks(8, 8, 2, 14, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);
  CHECK(reconstruct_gray(model, y, m).output.data == reconstruct_gray(loaded, y, m).output.data);
  std::filesystem::remove(path);
}

TEST_CASE("stage training graph equals the inference path value") {
  std::mt19937_64 rng(11);
  UnfoldSpec spec{1, 4, 2, ColorSpace::gray};
  UnfoldModel<float> model = UnfoldModel<float>::create(spec, 37);
  const VideoCube scene = testutil::random_video(8, 8, 2, rng);
  const MaskCube m = generate_masks(8, 8, 2, 15, MaskKind::binary);
  const Measurement y = forward_measure(scene, m, 0.0);
  const SensingSystem<float> sys = prepare_system<float>(y, m);
  const Tensor<float> rmf = tensor_from_cube<float>(reference_frames(y, m).rmf);

  Tape<float> tape;
  const int v0 = tape.constant_ref(&rmf);
  const auto outs = build_gray_stages(tape, model, sys, v0, v0, 0, 0);
  const Tensor<float> direct = stage_forward_tensor(model.stages[0], rmf, sys, rmf);
  CHECK(tape.val(outs[0]).data == direct.data);
}
