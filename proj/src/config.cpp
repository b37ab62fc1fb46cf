#include "adacast/config.hpp"

#include <fstream>
#include <set>

#include "adacast/error.hpp"

namespace adacast {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& doc, const char* key, T& target) {
  if (!doc.contains(key)) return;
  try {
    target = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("field '") + key + "': " + e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name", "input", "pattern", "content-seed", "velocity-x", "velocity-y", "width", "height", "frames",
      "block-size", "gop", "m-min", "rate", "csnr-db", "total-power", "subchannels", "loss-rate", "noiseless",
      "scaling", "matrix-seed", "channel-seed", "noise-seed", "loss-seed", "alpha", "beta", "gamma-f",
      "complexity-on-residual", "importance-on-original", "kmax", "eps", "window", "knn", "neighborhood",
      "wiener", "methods", "init", "residual-domain", "out", "jobs", "trace", "dump-alloc", "dump-plan"};
  return keys;
}

}  // namespace

std::string_view to_string(InitMode mode) {
  return mode == InitMode::BcsSpl ? "bcs-spl" : "back-projection";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "bcs-spl") return InitMode::BcsSpl;
  if (name == "back-projection") return InitMode::BackProjection;
  throw Error(ErrorKind::Config, "unknown init mode '" + std::string(name) + "'");
}

std::string_view to_string(ScalingMode mode) {
  return mode == ScalingMode::Power ? "power" : "amplitude";
}

ScalingMode parse_scaling_mode(std::string_view name) {
  if (name == "power") return ScalingMode::Power;
  if (name == "amplitude") return ScalingMode::Amplitude;
  throw Error(ErrorKind::Config, "unknown scaling mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  if (width <= 0 || height <= 0 || frames <= 0) fail("width, height and frames must be positive");
  if (block_size < 2) fail("block-size must be at least 2");
  if (gop < 1) fail("gop must be at least 1");
  if (min_per_block < 1 || min_per_block > block_size * block_size) fail("m-min must lie in [1, B^2]");
  if (rates.empty() || csnr_db.empty()) fail("rate and csnr-db lists must not be empty");
  for (auto r : rates)
    if (r <= 0) fail("rates must be positive");
  for (auto c : csnr_db)
    if (!(c > 0.0)) fail("csnr-db entries must be positive");
  if (!(total_power > 0.0)) fail("total-power must be positive");
  if (subchannels < 1) fail("subchannels must be at least 1");
  if (loss_rate < 0.0 || loss_rate > 1.0) fail("loss-rate must lie in [0, 1]");
  if (jobs < 1) fail("jobs must be at least 1");
  if (methods.empty()) fail("methods must not be empty");
  for (const auto& m : methods)
    if (m != "proposed" && m != "bcs-spl") fail("unknown method '" + m + "'");
  if (input.empty()) parse_synth_pattern(pattern);
  if (recon.max_iterations < 1) fail("kmax must be at least 1");
  if (!(recon.tolerance > 0.0)) fail("eps must be positive");
  if (recon.similar_blocks < 1) fail("knn must be at least 1");
  if (recon.search_window < block_size) fail("window must be at least the block size");
  if (recon.neighborhood < 1) fail("neighborhood must be at least 1");
  if (recon.wiener_window < 3 || recon.wiener_window % 2 == 0) fail("wiener must be odd and at least 3");
}

ExperimentConfig config_from_json(const json& doc, ExperimentConfig cfg) {
  if (!doc.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known_keys().count(key)) throw Error(ErrorKind::Config, "unknown config key '" + key + "'");

  read_field(doc, "name", cfg.name);
  read_field(doc, "input", cfg.input);
  read_field(doc, "pattern", cfg.pattern);
  read_field(doc, "content-seed", cfg.content_seed);
  read_field(doc, "velocity-x", cfg.synth.velocity_x);
  read_field(doc, "velocity-y", cfg.synth.velocity_y);
  read_field(doc, "width", cfg.width);
  read_field(doc, "height", cfg.height);
  read_field(doc, "frames", cfg.frames);
  read_field(doc, "block-size", cfg.block_size);
  read_field(doc, "gop", cfg.gop);
  read_field(doc, "m-min", cfg.min_per_block);
  read_field(doc, "rate", cfg.rates);
  read_field(doc, "csnr-db", cfg.csnr_db);
  read_field(doc, "total-power", cfg.total_power);
  read_field(doc, "subchannels", cfg.subchannels);
  read_field(doc, "loss-rate", cfg.loss_rate);
  read_field(doc, "noiseless", cfg.noiseless);
  if (doc.contains("scaling")) cfg.scaling = parse_scaling_mode(doc.at("scaling").get<std::string>());
  read_field(doc, "matrix-seed", cfg.matrix_seed);
  read_field(doc, "channel-seed", cfg.channel_seed);
  read_field(doc, "noise-seed", cfg.noise_seed);
  read_field(doc, "loss-seed", cfg.loss_seed);
  read_field(doc, "alpha", cfg.fusion.texture);
  read_field(doc, "beta", cfg.fusion.saliency);
  read_field(doc, "gamma-f", cfg.fusion.interaction);
  read_field(doc, "complexity-on-residual", cfg.complexity_on_residual);
  read_field(doc, "importance-on-original", cfg.importance_on_original);
  read_field(doc, "kmax", cfg.recon.max_iterations);
  read_field(doc, "eps", cfg.recon.tolerance);
  read_field(doc, "window", cfg.recon.search_window);
  read_field(doc, "knn", cfg.recon.similar_blocks);
  read_field(doc, "neighborhood", cfg.recon.neighborhood);
  read_field(doc, "wiener", cfg.recon.wiener_window);
  read_field(doc, "methods", cfg.methods);
  if (doc.contains("init")) cfg.init = parse_init_mode(doc.at("init").get<std::string>());
  read_field(doc, "residual-domain", cfg.residual_domain);
  if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();
  read_field(doc, "jobs", cfg.jobs);
  read_field(doc, "trace", cfg.trace);
  read_field(doc, "dump-alloc", cfg.dump_alloc);
  read_field(doc, "dump-plan", cfg.dump_plan);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return config_from_json(doc, std::move(base));
}

json to_json(const ExperimentConfig& cfg) {
  return json{{"name", cfg.name},
              {"input", cfg.input},
              {"pattern", cfg.pattern},
              {"content-seed", cfg.content_seed},
              {"velocity-x", cfg.synth.velocity_x},
              {"velocity-y", cfg.synth.velocity_y},
              {"width", cfg.width},
              {"height", cfg.height},
              {"frames", cfg.frames},
              {"block-size", cfg.block_size},
              {"gop", cfg.gop},
              {"m-min", cfg.min_per_block},
              {"rate", cfg.rates},
              {"csnr-db", cfg.csnr_db},
              {"total-power", cfg.total_power},
              {"subchannels", cfg.subchannels},
              {"loss-rate", cfg.loss_rate},
              {"noiseless", cfg.noiseless},
              {"scaling", to_string(cfg.scaling)},
              {"matrix-seed", cfg.matrix_seed},
              {"channel-seed", cfg.channel_seed},
              {"noise-seed", cfg.noise_seed},
              {"loss-seed", cfg.loss_seed},
              {"alpha", cfg.fusion.texture},
              {"beta", cfg.fusion.saliency},
              {"gamma-f", cfg.fusion.interaction},
              {"complexity-on-residual", cfg.complexity_on_residual},
              {"importance-on-original", cfg.importance_on_original},
              {"kmax", cfg.recon.max_iterations},
              {"eps", cfg.recon.tolerance},
              {"window", cfg.recon.search_window},
              {"knn", cfg.recon.similar_blocks},
              {"neighborhood", cfg.recon.neighborhood},
              {"wiener", cfg.recon.wiener_window},
              {"methods", cfg.methods},
              {"init", to_string(cfg.init)},
              {"residual-domain", cfg.residual_domain},
              {"out", cfg.out.string()},
              {"jobs", cfg.jobs},
              {"trace", cfg.trace},
              {"dump-alloc", cfg.dump_alloc},
              {"dump-plan", cfg.dump_plan}};
}

VideoSequence load_input(const ExperimentConfig& cfg) {
  if (!cfg.input.empty())
    return load_video(cfg.input, cfg.width, cfg.height, cfg.frames, raw_format_for_path(cfg.input), cfg.gop);
  return synthesize_video(cfg.width, cfg.height, cfg.frames, parse_synth_pattern(cfg.pattern), cfg.content_seed,
                          cfg.synth, cfg.gop);
}

}  // namespace adacast
