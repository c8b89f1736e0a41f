#include "metalstm/config.hpp"

#include <json.hpp>

#include <set>

#include "metalstm/container.hpp"

namespace metalstm {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json gen_to_json(const GenConfig& g) {
  return json{{"n_samples", g.n_samples},
              {"beta_noise", g.beta_noise},
              {"balance_min", g.balance_min},
              {"train_fraction_min", g.train_fraction_min},
              {"train_fraction_max", g.train_fraction_max},
              {"max_rejects", g.max_rejects},
              {"label_source", to_string(g.label_source)}};
}

void gen_from_json(const json& j, GenConfig& g) {
  reject_unknown(j, {"n_in", "n_samples", "beta_noise", "balance_min", "train_fraction_min", "train_fraction_max",
                     "max_rejects", "label_source"},
                 "generator");
  read(j, "n_in", g.n_in, "generator");
  read(j, "n_samples", g.n_samples, "generator");
  read(j, "beta_noise", g.beta_noise, "generator");
  read(j, "balance_min", g.balance_min, "generator");
  read(j, "train_fraction_min", g.train_fraction_min, "generator");
  read(j, "train_fraction_max", g.train_fraction_max, "generator");
  read(j, "max_rejects", g.max_rejects, "generator");
  std::string source = to_string(g.label_source);
  read(j, "label_source", source, "generator");
  try {
    g.label_source = label_source_from_string(source);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("generator: ") + e.what());
  }
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  const json root = parse_text(json_text);
  reject_unknown(root, {"model", "learner", "generator", "training", "output"}, "config");
  RunConfig c;

  if (root.contains("model")) {
    const json& m = root["model"];
    reject_unknown(m, {"n_in", "n_hidden"}, "model");
    read(m, "n_in", c.model.n_in, "model");
    read(m, "n_hidden", c.model.n_hidden, "model");
  }
  if (root.contains("learner")) {
    const json& l = root["learner"];
    reject_unknown(l, {"fc_sizes"}, "learner");
    read(l, "fc_sizes", c.fc_sizes, "learner");
  }
  if (root.contains("generator")) {
    gen_from_json(root["generator"], c.generator);
    if (root["generator"].contains("n_in") && c.generator.n_in != c.model.n_in) {
      throw ConfigError("generator.n_in must equal model.n_in");
    }
  }
  c.generator.n_in = c.model.n_in;
  if (root.contains("training")) {
    const json& t = root["training"];
    reject_unknown(t, {"learning_rate", "iterations", "seed", "pool_size", "checkpoint_every", "log_every",
                       "clip_norm"},
                   "training");
    read(t, "learning_rate", c.training.learning_rate, "training");
    read(t, "iterations", c.training.iterations, "training");
    read(t, "seed", c.training.seed, "training");
    read(t, "pool_size", c.training.pool_size, "training");
    read(t, "checkpoint_every", c.training.checkpoint_every, "training");
    read(t, "log_every", c.training.log_every, "training");
    read(t, "clip_norm", c.training.clip_norm, "training");
  }
  if (root.contains("output")) {
    const json& o = root["output"];
    reject_unknown(o, {"checkpoint", "loss_log"}, "output");
    read(o, "checkpoint", c.output.checkpoint, "output");
    read(o, "loss_log", c.output.loss_log, "output");
  }

  try {
    c.model.validate();
    LearnerShape::for_model(c.model, c.fc_sizes);
    c.generator.validate();
    c.training.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(io::read_file(path)); }

std::string dump_run_config(const RunConfig& c) {
  json j;
  j["model"] = {{"n_in", c.model.n_in}, {"n_hidden", c.model.n_hidden}};
  j["learner"] = {{"fc_sizes", c.fc_sizes}};
  j["generator"] = gen_to_json(c.generator);
  j["training"] = {{"learning_rate", c.training.learning_rate}, {"iterations", c.training.iterations},
                   {"seed", c.training.seed},                   {"pool_size", c.training.pool_size},
                   {"checkpoint_every", c.training.checkpoint_every}, {"log_every", c.training.log_every},
                   {"clip_norm", c.training.clip_norm}};
  j["output"] = {{"checkpoint", c.output.checkpoint}, {"loss_log", c.output.loss_log}};
  return j.dump(2);
}

std::string dump_gen_config(const GenConfig& g) {
  json j = gen_to_json(g);
  j["n_in"] = g.n_in;
  return j.dump(2);
}

GenConfig parse_gen_config(const std::string& json_text) {
  GenConfig g;
  gen_from_json(parse_text(json_text), g);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return g;
}

}  // namespace metalstm
