#include "vcs/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vcs {

namespace {

using nlohmann::json;

[[noreturn]] void unknown_key(const std::string& section, const std::string& key) {
  throw ParseError("config: unknown key \"" + (section.empty() ? key : section + "." + key) +
                   "\"");
}

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (known.find(it.key()) == known.end()) unknown_key(section, it.key());
  }
}

template <class T>
T get_number(const json& obj, const std::string& section, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ParseError("config: \"" + section + "." + key + "\" must be a number");
  }
  return v.get<T>();
}

bool get_bool(const json& obj, const std::string& section, const std::string& key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    throw ParseError("config: \"" + section + "." + key + "\" must be a boolean");
  }
  return v.get<bool>();
}

void parse_train(const json& obj, TrainConfig& cfg) {
  check_keys(obj, "train",
             {"epochs_per_phase", "batch_size", "lr0", "lr_warm_epochs", "lr_decay",
              "lr_decay_every", "seed", "samples", "width", "height", "frames", "mode",
              "resample_masks_per_batch"});
  if (obj.contains("epochs_per_phase")) {
    const json& e = obj.at("epochs_per_phase");
    if (!e.is_array() || e.size() != 3) {
      throw ParseError("config: \"train.epochs_per_phase\" must be an array of 3 integers");
    }
    for (int i = 0; i < 3; ++i) cfg.epochs_per_phase[i] = e.at(i).get<int>();
  }
  cfg.batch_size = get_number(obj, "train", "batch_size", cfg.batch_size);
  cfg.lr0 = get_number(obj, "train", "lr0", cfg.lr0);
  cfg.lr_warm_epochs = get_number(obj, "train", "lr_warm_epochs", cfg.lr_warm_epochs);
  cfg.lr_decay = get_number(obj, "train", "lr_decay", cfg.lr_decay);
  cfg.lr_decay_every = get_number(obj, "train", "lr_decay_every", cfg.lr_decay_every);
  cfg.seed = get_number(obj, "train", "seed", cfg.seed);
  cfg.samples = get_number(obj, "train", "samples", cfg.samples);
  cfg.width = get_number(obj, "train", "width", cfg.width);
  cfg.height = get_number(obj, "train", "height", cfg.height);
  cfg.frames = get_number(obj, "train", "frames", cfg.frames);
  if (obj.contains("mode")) {
    const std::string mode = obj.at("mode").get<std::string>();
    if (mode == "gray") {
      cfg.mode = ColorSpace::gray;
    } else if (mode == "color") {
      cfg.mode = ColorSpace::rgb;
    } else {
      throw ParseError("config: \"train.mode\" must be \"gray\" or \"color\"");
    }
  }
  cfg.resample_masks_per_batch =
      get_bool(obj, "train", "resample_masks_per_batch", cfg.resample_masks_per_batch);
}

void parse_model(const json& obj, UnfoldSpec& spec) {
  check_keys(obj, "model", {"stages", "channels", "blocks"});
  spec.stages = get_number(obj, "model", "stages", spec.stages);
  spec.channels = get_number(obj, "model", "channels", spec.channels);
  spec.blocks = get_number(obj, "model", "blocks", spec.blocks);
}

void parse_gap_tv(const json& obj, GapTvConfig& cfg) {
  check_keys(obj, "gap_tv", {"iters", "tv_weight", "tv_inner_iters", "tv_mode"});
  cfg.iters = get_number(obj, "gap_tv", "iters", cfg.iters);
  cfg.tv_weight = get_number(obj, "gap_tv", "tv_weight", cfg.tv_weight);
  cfg.tv_inner_iters = get_number(obj, "gap_tv", "tv_inner_iters", cfg.tv_inner_iters);
  if (obj.contains("tv_mode")) {
    const std::string mode = obj.at("tv_mode").get<std::string>();
    if (mode == "anisotropic") {
      cfg.tv_mode = TvMode::anisotropic;
    } else if (mode == "isotropic") {
      cfg.tv_mode = TvMode::isotropic;
    } else {
      throw ParseError("config: \"gap_tv.tv_mode\" must be \"anisotropic\" or \"isotropic\"");
    }
  }
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: top level must be an object");
  check_keys(doc, "", {"train", "model", "gap_tv"});

  RunConfig cfg;
  if (doc.contains("train")) parse_train(doc.at("train"), cfg.train);
  if (doc.contains("model")) parse_model(doc.at("model"), cfg.model);
  if (doc.contains("gap_tv")) parse_gap_tv(doc.at("gap_tv"), cfg.gap_tv);
  cfg.model.mode = cfg.train.mode;
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json doc;
  doc["train"] = {
      {"epochs_per_phase",
       {cfg.train.epochs_per_phase[0], cfg.train.epochs_per_phase[1],
        cfg.train.epochs_per_phase[2]}},
      {"batch_size", cfg.train.batch_size},
      {"lr0", cfg.train.lr0},
      {"lr_warm_epochs", cfg.train.lr_warm_epochs},
      {"lr_decay", cfg.train.lr_decay},
      {"lr_decay_every", cfg.train.lr_decay_every},
      {"seed", cfg.train.seed},
      {"samples", cfg.train.samples},
      {"width", cfg.train.width},
      {"height", cfg.train.height},
      {"frames", cfg.train.frames},
      {"mode", cfg.train.mode == ColorSpace::rgb ? "color" : "gray"},
      {"resample_masks_per_batch", cfg.train.resample_masks_per_batch},
  };
  doc["model"] = {
      {"stages", cfg.model.stages},
      {"channels", cfg.model.channels},
      {"blocks", cfg.model.blocks},
  };
  doc["gap_tv"] = {
      {"iters", cfg.gap_tv.iters},
      {"tv_weight", cfg.gap_tv.tv_weight},
      {"tv_inner_iters", cfg.gap_tv.tv_inner_iters},
      {"tv_mode", cfg.gap_tv.tv_mode == TvMode::isotropic ? "isotropic" : "anisotropic"},
  };
  return doc.dump(2) + "\n";
}

RunConfig run_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config \"" + path + "\"");
  std::ostringstream os;
  os << in.rdbuf();
  return run_config_from_json(os.str());
}

}  // namespace vcs
