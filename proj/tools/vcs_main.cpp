#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vcs/gap_tv.hpp"
#include "vcs/image_io.hpp"
#include "vcs/metrics.hpp"
#include "vcs/run_config.hpp"
#include "vcs/training.hpp"
#include "vcs/unfold_net.hpp"
#include "vcs/vcub.hpp"

namespace {

using namespace vcs;

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out << text;
  if (!out) throw IoError("write failed for \"" + path + "\"");
}

MaskCube load_mask(const std::string& path) { return mask_from_records(vcub_read(path)); }

std::pair<int, int> parse_tiles(const std::string& spec) {
  const auto x = spec.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= spec.size()) {
    throw ParseError("--tiles expects RxC, e.g. 2x2, got \"" + spec + "\"");
  }
  try {
    return {std::stoi(spec.substr(0, x)), std::stoi(spec.substr(x + 1))};
  } catch (const std::exception&) {
    throw ParseError("--tiles expects RxC, e.g. 2x2, got \"" + spec + "\"");
  }
}

int cmd_gen_masks(int w, int h, int t, std::uint64_t seed, const std::string& kind,
                  const std::string& out) {
  if (kind != "binary" && kind != "continuous") {
    throw ParseError("--kind must be binary or continuous");
  }
  const MaskCube m =
      generate_masks(w, h, t, seed, kind == "binary" ? MaskKind::binary : MaskKind::continuous);
  VcubFile file;
  file.add(record_from_mask(m));
  file.add(record_mask_kind(m));
  vcub_write(out, file);
  std::printf("wrote mask %s to %s\n", shape_string(m).c_str(), out.c_str());
  return 0;
}

int cmd_simulate(const std::string& video_path, const std::string& mask_path, double sigma,
                 std::uint64_t seed, bool color, const std::string& out) {
  const VideoCube video = video_from_record(vcub_read(video_path).require("video"));
  const MaskCube mask = load_mask(mask_path);
  if (color && video.colorspace != ColorSpace::rgb) {
    throw DimensionError("--color given but video " + shape_string(video) + " is grayscale");
  }
  const Measurement y = video.colorspace == ColorSpace::rgb
                            ? forward_measure_color(video, mask, sigma, seed)
                            : forward_measure(video, mask, sigma, seed);
  VcubFile file;
  file.add(record_from_measurement(y));
  const double s = y.noise_sigma;
  file.add(VcubRecord::make_f64("noise_sigma", {1}, &s));
  vcub_write(out, file);
  std::printf("wrote measurement %s to %s\n", shape_string(y).c_str(), out.c_str());
  return 0;
}

int cmd_reconstruct(const std::string& y_path, const std::string& mask_path,
                    const std::string& method, const std::string& model_path,
                    const std::string& out, const std::string& tiles_spec,
                    const GapTvConfig& gap_cfg, const std::string& export_dir) {
  const Measurement y = measurement_from_records(vcub_read(y_path));
  const MaskCube mask = load_mask(mask_path);
  const auto [rows, cols] = parse_tiles(tiles_spec);

  VideoCube x;
  const auto t0 = std::chrono::steady_clock::now();
  if (method == "gap-tv") {
    x = tiled_reconstruct(
        [&gap_cfg](const Measurement& by, const MaskCube& bm) {
          return gap_tv_reconstruct(by, bm, gap_cfg);
        },
        y, mask, rows, cols);
  } else if (method == "unfold") {
    if (model_path.empty()) throw ParseError("--method unfold requires --model");
    const UnfoldModel<float> model = load_model<float>(model_path);
    x = tiled_reconstruct(model, y, mask, rows, cols);
  } else {
    throw ParseError("--method must be gap-tv or unfold");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  VcubFile file;
  file.add(record_from_video("x", x));
  vcub_write(out, file);
  if (!export_dir.empty()) export_pgm_ppm(x, export_dir);
  std::printf("wrote reconstruction %s to %s\n", shape_string(x).c_str(), out.c_str());
  std::printf("running time per measurement: %.3f s\n", seconds);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const RunConfig cfg = run_config_from_file(config_path);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create \"" + out_dir + "\": " + ec.message());

  UnfoldModel<float> model = UnfoldModel<float>::create(cfg.model, cfg.train.seed);
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const std::string& tag, const UnfoldModel<float>& m) {
    save_model((std::filesystem::path(out_dir) / ("checkpoint_" + tag + ".vcub")).string(), m);
  };
  hooks.on_epoch = [](const LossRow& row) {
    std::printf("epoch %3d  phase %d  lr %.3g  loss %.6g\n", row.epoch, row.phase, row.lr,
                row.loss);
    std::fflush(stdout);
  };

  const TrainResult result = train(model, cfg.train, hooks);

  save_model((std::filesystem::path(out_dir) / "model.vcub").string(), model);
  VcubFile mf;
  mf.add(record_from_mask(result.mask));
  mf.add(record_mask_kind(result.mask));
  vcub_write((std::filesystem::path(out_dir) / "mask.vcub").string(), mf);
  write_text_file((std::filesystem::path(out_dir) / "loss_log.csv").string(),
                  loss_log_csv(result.log));
  std::printf("trained model written to %s\n",
              (std::filesystem::path(out_dir) / "model.vcub").string().c_str());
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& suite,
             const std::string& mask_path, int scenes, std::uint64_t scene_seed,
             std::uint64_t mask_seed, const std::string& report_path) {
  const UnfoldModel<float> model = load_model<float>(model_path);
  const ColorSpace mode = model.spec.mode;

  EvalReport report;
  if (suite == "masks") {
    if (mask_path.empty()) throw ParseError("--suite masks requires --mask");
    const MaskCube trained = load_mask(mask_path);
    const auto held_out = synth_scenes(scenes, trained.w, trained.h, trained.t, mode, scene_seed);
    report = eval_flexibility_masks(model, held_out, trained, 3, mask_seed);
  } else if (suite == "scale") {
    if (mask_path.empty()) throw ParseError("--suite scale requires --mask (for base dims)");
    const MaskCube trained = load_mask(mask_path);
    const auto big =
        synth_scenes(scenes, 2 * trained.w, 2 * trained.h, trained.t, mode, scene_seed);
    report = eval_flexibility_scale(model, big, mask_seed);
  } else {
    throw ParseError("--suite must be masks or scale");
  }

  if (!report_path.empty()) write_text_file(report_path, report.to_csv());
  std::fputs(report.to_table().c_str(), stdout);
  return 0;
}

int cmd_synth(int w, int h, int t, std::uint64_t seed, bool color, const std::string& out) {
  const auto scenes =
      synth_scenes(1, w, h, t, color ? ColorSpace::rgb : ColorSpace::gray, seed);
  VcubFile file;
  file.add(record_from_video("video", scenes[0]));
  vcub_write(out, file);
  std::printf("wrote video %s to %s\n", shape_string(scenes[0]).c_str(), out.c_str());
  return 0;
}

int cmd_export(const std::string& cube_path, const std::string& record, const std::string& dir) {
  const VideoCube cube = video_from_record(vcub_read(cube_path).require(record));
  const auto paths = export_pgm_ppm(cube, dir);
  std::printf("wrote %zu frames to %s\n", paths.size(), dir.c_str());
  return 0;
}

const char* error_kind(const Error& e) {
  if (dynamic_cast<const DimensionError*>(&e) != nullptr) return "data";
  if (dynamic_cast<const CapacityError*>(&e) != nullptr) return "capacity";
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return "numeric";
  if (dynamic_cast<const IoError*>(&e) != nullptr) return "io";
  if (dynamic_cast<const ParseError*>(&e) != nullptr) return "parse";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video compressive sensing toolkit: mask-modulated snapshot simulation, GAP-TV "
               "and 2-stage unfolding reconstruction"};
  app.set_help_flag("--help", "print help");  // frees -h / --h for height
  app.require_subcommand(1);

  // gen-masks
  auto* gen = app.add_subcommand("gen-masks", "Generate a seeded modulation mask cube");
  int gw = 0, gh = 0, gt = 0;
  std::uint64_t gseed = 0;
  std::string gkind = "binary", gout;
  gen->add_option("--w", gw, "width")->required()->check(CLI::PositiveNumber);
  gen->add_option("--h", gh, "height")->required()->check(CLI::PositiveNumber);
  gen->add_option("--t", gt, "frames")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gseed, "rng seed")->required();
  gen->add_option("--kind", gkind, "binary|continuous");
  gen->add_option("--out", gout, "output .vcub path")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a snapshot measurement from a video");
  std::string svideo, smask, sout;
  double ssigma = 0.0;
  std::uint64_t sseed = 0;
  bool scolor = false;
  sim->add_option("--video", svideo, "input video .vcub (record \"video\")")->required();
  sim->add_option("--mask", smask, "mask .vcub")->required();
  sim->add_option("--sigma", ssigma, "measurement noise stddev")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", sseed, "noise seed");
  sim->add_flag("--color", scolor, "require a Bayer color simulation");
  sim->add_option("--out", sout, "output .vcub path")->required();

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct video from a measurement");
  std::string ry, rmask, rmethod = "gap-tv", rmodel, rout, rtiles = "1x1", rexport;
  GapTvConfig gap_cfg;
  std::string rtv_mode = "anisotropic";
  rec->add_option("--y", ry, "measurement .vcub")->required();
  rec->add_option("--mask", rmask, "mask .vcub")->required();
  rec->add_option("--method", rmethod, "gap-tv|unfold");
  rec->add_option("--model", rmodel, "unfold checkpoint .vcub");
  rec->add_option("--out", rout, "output .vcub path")->required();
  rec->add_option("--tiles", rtiles, "RxC block tiling (default 1x1)");
  rec->add_option("--gap-iters", gap_cfg.iters, "GAP-TV outer iterations");
  rec->add_option("--tv-weight", gap_cfg.tv_weight, "TV regularization weight");
  rec->add_option("--tv-inner", gap_cfg.tv_inner_iters, "TV inner iterations");
  rec->add_option("--tv-mode", rtv_mode, "anisotropic|isotropic");
  rec->add_option("--export-dir", rexport, "also export frames as PGM/PPM");

  // train
  auto* tr = app.add_subcommand("train", "Train the unfolding model on synthetic scenes");
  std::string tconfig, tout;
  tr->add_option("--config", tconfig, "JSON run config")->required();
  tr->add_option("--out-dir", tout, "output directory")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a trained model (mask/scale flexibility)");
  std::string emodel, esuite = "masks", emask, ereport;
  int escenes = 20;
  std::uint64_t escene_seed = 4242, emask_seed = 1234;
  ev->add_option("--model", emodel, "checkpoint .vcub")->required();
  ev->add_option("--suite", esuite, "masks|scale");
  ev->add_option("--mask", emask, "trained mask .vcub");
  ev->add_option("--scenes", escenes, "held-out scene count")->check(CLI::PositiveNumber);
  ev->add_option("--scene-seed", escene_seed, "held-out scene seed");
  ev->add_option("--mask-seed", emask_seed, "fresh mask seed");
  ev->add_option("--report", ereport, "CSV report path");

  // synth
  auto* sy = app.add_subcommand("synth", "Generate one synthetic moving-object test scene");
  int yw = 32, yh = 32, yt = 4;
  std::uint64_t yseed = 1;
  bool ycolor = false;
  std::string yout;
  sy->add_option("--w", yw, "width")->check(CLI::PositiveNumber);
  sy->add_option("--h", yh, "height")->check(CLI::PositiveNumber);
  sy->add_option("--t", yt, "frames")->check(CLI::PositiveNumber);
  sy->add_option("--seed", yseed, "scene seed");
  sy->add_flag("--color", ycolor, "rgb scene");
  sy->add_option("--out", yout, "output .vcub path")->required();

  // export
  auto* ex = app.add_subcommand("export", "Export a cube record to PGM/PPM frames");
  std::string xcube, xrecord = "x", xdir;
  ex->add_option("--cube", xcube, "input .vcub")->required();
  ex->add_option("--record", xrecord, "record name (default \"x\")");
  ex->add_option("--dir", xdir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::ostringstream msg;
    msg << e.what();
    std::fprintf(stderr, "error: usage: %s\n", msg.str().c_str());
    return 2;
  }

  try {
    if (rtv_mode != "anisotropic" && rtv_mode != "isotropic") {
      throw ParseError("--tv-mode must be anisotropic or isotropic");
    }
    gap_cfg.tv_mode = rtv_mode == "isotropic" ? TvMode::isotropic : TvMode::anisotropic;

    if (gen->parsed()) return cmd_gen_masks(gw, gh, gt, gseed, gkind, gout);
    if (sim->parsed()) return cmd_simulate(svideo, smask, ssigma, sseed, scolor, sout);
    if (rec->parsed()) {
      return cmd_reconstruct(ry, rmask, rmethod, rmodel, rout, rtiles, gap_cfg, rexport);
    }
    if (tr->parsed()) return cmd_train(tconfig, tout);
    if (ev->parsed()) {
      return cmd_eval(emodel, esuite, emask, escenes, escene_seed, emask_seed, ereport);
    }
    if (sy->parsed()) return cmd_synth(yw, yh, yt, yseed, ycolor, yout);
    if (ex->parsed()) return cmd_export(xcube, xrecord, xdir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", error_kind(e), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
