#include "metalstm/checkpoint.hpp"

#include <json.hpp>

#include <sstream>

namespace metalstm {

using nlohmann::json;

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.params.shape();
  io::Container c;
  c.magic = kCheckpointMagic;
  c.version = kCheckpointVersion;
  json header{
      {"model", {{"n_in", ckpt.model.n_in}, {"n_hidden", ckpt.model.n_hidden}, {"n_out", ckpt.model.n_out}}},
      {"learner",
       {{"input_dim", ckpt.learner.input_dim},
        {"fc_sizes", ckpt.learner.fc_sizes},
        {"model_dim", ckpt.learner.model_dim}}},
      {"iteration", ckpt.iteration},
      {"seed", ckpt.seed},
      {"config", ckpt.config_echo},
  };
  c.header = header.dump();

  const auto arrays = ckpt.params.arrays();
  const auto names = ckpt.params.array_names();
  for (std::size_t i = 0; i < arrays.size(); ++i) c.sections.push_back({names[i], arrays[i]->values()});
  c.sections.push_back({"opt.g1", ckpt.optimizer.g1});
  c.sections.push_back({"opt.g2", ckpt.optimizer.g2});
  c.sections.push_back({"opt.mem", ckpt.optimizer.mem});
  return io::encode_container(c);
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  std::istringstream is(bytes);
  const io::Container c = io::read_container(is, kCheckpointMagic, kCheckpointVersion);

  Checkpoint ckpt;
  try {
    const json h = json::parse(c.header);
    ckpt.model.n_in = h.at("model").at("n_in").get<std::size_t>();
    ckpt.model.n_hidden = h.at("model").at("n_hidden").get<std::size_t>();
    ckpt.model.n_out = h.at("model").at("n_out").get<std::size_t>();
    ckpt.learner.input_dim = h.at("learner").at("input_dim").get<std::size_t>();
    ckpt.learner.fc_sizes = h.at("learner").at("fc_sizes").get<std::vector<std::size_t>>();
    ckpt.learner.model_dim = h.at("learner").at("model_dim").get<std::size_t>();
    ckpt.iteration = h.at("iteration").get<std::uint64_t>();
    ckpt.seed = h.at("seed").get<std::uint64_t>();
    ckpt.config_echo = h.at("config").get<std::string>();
  } catch (const json::exception& e) {
    throw io::FormatError(std::string("checkpoint header: ") + e.what());
  }

  try {
    const LearnerShape expected = LearnerShape::for_model(ckpt.model, ckpt.learner.fc_sizes);
    if (!(expected == ckpt.learner)) throw io::ShapeInconsistent("checkpoint: learner shape does not fit the model");
  } catch (const std::invalid_argument& e) {
    throw io::ShapeInconsistent(std::string("checkpoint: ") + e.what());
  }

  // Allocate the expected arrays, then fill them from sections of matching length.
  ckpt.params = init_alpha(ckpt.learner, 0);
  const auto names = ckpt.params.array_names();
  const auto arrays = ckpt.params.arrays();
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    const auto& data = c.f64(names[i]);
    if (data.size() != arrays[i]->size()) {
      throw io::ShapeInconsistent("checkpoint: section \"" + names[i] + "\" holds " + std::to_string(data.size()) +
                                  " values, header implies " + std::to_string(arrays[i]->size()));
    }
    arrays[i]->values() = data;
  }
  const std::size_t n = ckpt.params.size();
  auto opt = [&](const char* name) {
    const auto& data = c.f64(name);
    if (data.size() != n) {
      throw io::ShapeInconsistent(std::string("checkpoint: section \"") + name + "\" holds " +
                                  std::to_string(data.size()) + " values, expected " + std::to_string(n));
    }
    return data;
  };
  ckpt.optimizer.g1 = opt("opt.g1");
  ckpt.optimizer.g2 = opt("opt.g2");
  ckpt.optimizer.mem = opt("opt.mem");
  if (c.sections.size() != arrays.size() + 3) throw io::ShapeInconsistent("checkpoint: unexpected extra sections");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  io::write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace metalstm
