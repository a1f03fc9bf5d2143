#include "factprobe/probe_model.hpp"

#include "factprobe/detail/binary_io.hpp"
#include "json.hpp"

namespace factprobe {

using nlohmann::json;

void ProbeConfig::validate() const {
  if (input_dims.empty()) throw InvalidArgument("probe needs at least one input");
  for (int d : input_dims) {
    if (d <= 0) throw InvalidArgument("input dims must be positive");
  }
  if (hidden_size <= 0) throw InvalidArgument("hidden_size must be positive");
  if (n_classes <= 0) throw InvalidArgument("n_classes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
}

std::int64_t count_params(const ProbeConfig& config) {
  config.validate();
  const std::int64_t h = config.hidden_size;
  std::int64_t total = 0;
  for (int d : config.input_dims) total += h * d + h;
  total += static_cast<std::int64_t>(config.n_classes) * config.num_inputs() * h + config.n_classes;
  return total;
}

namespace {

json config_to_json(const ProbeConfig& c) {
  return json{{"input_dims", c.input_dims},
              {"hidden_size", c.hidden_size},
              {"n_classes", c.n_classes},
              {"dropout", c.dropout},
              {"seed", c.seed}};
}

ProbeConfig config_from_json(const json& j) {
  ProbeConfig c;
  c.input_dims = j.at("input_dims").get<std::vector<int>>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.config.validate();
  const auto expected = ProbeParamsf::zeros(ckpt.config);
  bool shapes_ok = expected.num_inputs() == ckpt.params.num_inputs();
  if (shapes_ok) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> want;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> have;
    expected.for_each_tensor([&](const auto& t) { want.emplace_back(t.rows(), t.cols()); });
    ckpt.params.for_each_tensor([&](const auto& t) { have.emplace_back(t.rows(), t.cols()); });
    shapes_ok = want == have;
  }
  if (!shapes_ok) throw InvalidArgument("checkpoint params do not match config shapes");

  json header{{"config", config_to_json(ckpt.config)},
              {"seed", ckpt.config.seed},
              {"epoch", ckpt.epoch},
              {"val_loss", ckpt.val_loss}};
  json setups = json::array();
  for (auto s : ckpt.setups) setups.push_back(to_string(s));
  header["input_setups"] = setups;
  const std::string text = header.dump();

  std::string out(kCheckpointMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.append(text);
  ckpt.params.for_each_tensor([&](const auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) detail::put_f32(out, t(r, c));
    }
  });
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() ||
      bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("bad magic");
  }
  detail::Reader in(bytes);
  in.take(kCheckpointMagic.size());
  const auto header_text = in.take(in.u32());

  Checkpoint ckpt;
  try {
    const json header = json::parse(header_text);
    ckpt.config = config_from_json(header.at("config"));
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.val_loss = header.at("val_loss").get<double>();
    for (const auto& s : header.value("input_setups", json::array())) {
      auto setup = parse_input_setup(s.get<std::string>());
      if (!setup) throw FormatError("unknown input setup in checkpoint");
      ckpt.setups.push_back(*setup);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  try {
    ckpt.config.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }

  ckpt.params = ProbeParamsf::zeros(ckpt.config);
  ckpt.params.for_each_tensor([&](auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = in.f32();
    }
  });
  if (in.remaining() != 0) throw FormatError("trailing bytes after parameters");
  if (!ckpt.params.all_finite()) throw FormatError("non-finite value");
  return ckpt;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::string& path) {
  const auto bytes = detail::read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace factprobe
