#include "factprobe/embedding_store.hpp"

#include <boost/crc.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "factprobe/detail/binary_io.hpp"
#include "json.hpp"

namespace factprobe {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

using nlohmann::json;

std::uint64_t crc64(std::string_view bytes) {
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ull, ~0ull, ~0ull, true, true> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

namespace {

json manifest_to_json(const EmbeddingManifest& m) {
  return json{{"dataset", to_string(m.dataset)},
              {"split", to_string(m.split)},
              {"input_setup", to_string(m.input_setup)},
              {"source_model", m.source_model},
              {"ndim", m.ndim},
              {"count", m.count},
              {"format_version", m.format_version}};
}

template <typename T, typename Parse>
T parse_enum_field(const json& j, const char* key, Parse parse) {
  auto value = parse(j.at(key).get<std::string>());
  if (!value) throw FormatError(std::string("unknown ") + key + " in header");
  return *value;
}

EmbeddingManifest manifest_from_json(const json& j) {
  EmbeddingManifest m;
  try {
    m.dataset = parse_enum_field<DatasetId>(j, "dataset", parse_dataset_id);
    m.split = parse_enum_field<Split>(j, "split", parse_split);
    m.input_setup = parse_enum_field<InputSetup>(j, "input_setup", parse_input_setup);
    m.source_model = j.at("source_model").get<std::string>();
    m.ndim = j.at("ndim").get<std::uint32_t>();
    m.count = j.at("count").get<std::uint64_t>();
    m.format_version = j.at("format_version").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  if (m.format_version != kEmbeddingFormatVersion) {
    throw FormatError("unsupported format_version " + std::to_string(m.format_version));
  }
  if (m.ndim == 0) throw FormatError("malformed header: ndim must be positive");
  return m;
}

}  // namespace

std::string encode_embedding_set(const EmbeddingManifest& manifest,
                                 std::span<const PooledEmbedding> records) {
  if (manifest.ndim == 0) throw InvalidArgument("ndim must be positive");
  if (manifest.count != records.size()) throw InvalidArgument("count mismatch");

  std::vector<const PooledEmbedding*> order;
  order.reserve(records.size());
  for (const auto& r : records) {
    if (r.vector.size() != static_cast<Eigen::Index>(manifest.ndim)) {
      throw InvalidArgument("dimension mismatch");
    }
    if (!r.vector.allFinite()) throw InvalidArgument("non-finite value in " + r.instance_id);
    order.push_back(&r);
  }
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->instance_id < b->instance_id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->instance_id == order[i - 1]->instance_id) {
      throw InvalidArgument("duplicate instance_id: " + order[i]->instance_id);
    }
  }

  std::string payload;
  payload.reserve(records.size() * (4 + 16 + 1 + 4 * manifest.ndim));
  for (const auto* r : order) {
    detail::put_u32(payload, static_cast<std::uint32_t>(r->instance_id.size()));
    payload.append(r->instance_id);
    detail::put_u8(payload, static_cast<std::uint8_t>(r->label));
    for (Eigen::Index j = 0; j < r->vector.size(); ++j) detail::put_f32(payload, r->vector[j]);
  }

  const std::string header = manifest_to_json(manifest).dump();
  std::string out;
  out.reserve(kEmbeddingMagic.size() + 4 + header.size() + payload.size() + 8);
  out.append(kEmbeddingMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.append(header);
  out.append(payload);
  detail::put_u64(out, crc64(payload));
  return out;
}

EmbeddingSet decode_embedding_set(std::string_view bytes) {
  if (bytes.size() < kEmbeddingMagic.size() ||
      bytes.substr(0, kEmbeddingMagic.size()) != kEmbeddingMagic) {
    throw FormatError("bad magic");
  }
  detail::Reader in(bytes);
  in.take(kEmbeddingMagic.size());
  const std::uint32_t header_len = in.u32();
  const auto header_text = in.take(header_len);

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  EmbeddingSet set;
  set.manifest = manifest_from_json(header);
  const auto ndim = set.manifest.ndim;

  const std::size_t payload_begin = in.position();
  const std::size_t record_min = 4 + 1 + 4 * static_cast<std::size_t>(ndim);
  if (set.manifest.count <= in.remaining() / record_min) {
    set.records.reserve(set.manifest.count);
  }
  for (std::uint64_t i = 0; i < set.manifest.count; ++i) {
    if (in.remaining() == 8) throw FormatError("count mismatch");
    PooledEmbedding rec;
    const std::uint32_t id_len = in.u32();
    rec.instance_id = std::string(in.take(id_len));
    const std::uint8_t label = in.u8();
    if (label >= kNumClasses) throw FormatError("invalid label");
    rec.label = static_cast<Label>(label);
    rec.vector.resize(ndim);
    for (std::uint32_t j = 0; j < ndim; ++j) {
      const float v = in.f32();
      if (!std::isfinite(v)) throw FormatError("non-finite value");
      rec.vector[j] = v;
    }
    set.records.push_back(std::move(rec));
  }
  if (in.remaining() < 8) throw FormatError("truncated payload");
  if (in.remaining() > 8) throw FormatError("count mismatch");
  const auto payload = bytes.substr(payload_begin, in.position() - payload_begin);
  if (in.u64() != crc64(payload)) throw FormatError("checksum mismatch");
  return set;
}

void write_embedding_set(const EmbeddingManifest& manifest,
                         std::span<const PooledEmbedding> records, const std::string& path) {
  detail::write_file(path, encode_embedding_set(manifest, records));
}

EmbeddingSet read_embedding_set(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return decode_embedding_set(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

JoinedDataset JoinedDataset::subset(std::span<const std::size_t> indices) const {
  JoinedDataset out;
  out.dataset = dataset;
  out.split = split;
  out.setups = setups;
  out.dims = dims;
  out.ids.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.ids.push_back(ids.at(i));
    out.labels.push_back(labels.at(i));
  }
  for (std::size_t s = 0; s < features.size(); ++s) {
    Eigen::MatrixXf m(dims[s], static_cast<Eigen::Index>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) {
      m.col(static_cast<Eigen::Index>(c)) = features[s].col(static_cast<Eigen::Index>(indices[c]));
    }
    out.features.push_back(std::move(m));
  }
  out.diagnostics.rows = out.size();
  return out;
}

Eigen::MatrixXf JoinedDataset::stacked() const {
  Eigen::Index total = 0;
  for (int d : dims) total += d;
  Eigen::MatrixXf out(total, static_cast<Eigen::Index>(size()));
  Eigen::Index offset = 0;
  for (std::size_t s = 0; s < features.size(); ++s) {
    out.middleRows(offset, dims[s]) = features[s];
    offset += dims[s];
  }
  return out;
}

std::array<std::size_t, kNumClasses> JoinedDataset::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (auto l : labels) ++counts[label_index(l)];
  return counts;
}

JoinedDataset join_setups(std::span<const EmbeddingSet> sets) {
  if (sets.empty()) throw InvalidArgument("join needs at least one embedding set");
  JoinedDataset out;
  out.dataset = sets.front().manifest.dataset;
  out.split = sets.front().manifest.split;
  std::set<InputSetup> seen;
  for (const auto& s : sets) {
    if (s.manifest.dataset != out.dataset || s.manifest.split != out.split) {
      throw InvalidArgument("embedding sets disagree on dataset or split");
    }
    if (!seen.insert(s.manifest.input_setup).second) {
      throw InvalidArgument("input setup given twice: " +
                            std::string(to_string(s.manifest.input_setup)));
    }
    out.setups.push_back(s.manifest.input_setup);
    out.dims.push_back(static_cast<int>(s.manifest.ndim));
  }

  // id -> (label, per-set record index)
  struct Slot {
    Label label;
    std::vector<std::ptrdiff_t> where;
  };
  std::map<std::string, Slot> index;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (std::size_t r = 0; r < sets[s].records.size(); ++r) {
      const auto& rec = sets[s].records[r];
      if (rec.vector.size() != out.dims[s]) throw InvalidArgument("dimension mismatch");
      auto [it, inserted] =
          index.try_emplace(rec.instance_id, Slot{rec.label, std::vector<std::ptrdiff_t>(sets.size(), -1)});
      if (!inserted && it->second.label != rec.label) {
        throw InvalidArgument("label conflict: " + rec.instance_id);
      }
      if (it->second.where[s] >= 0) {
        throw InvalidArgument("duplicate instance_id: " + rec.instance_id);
      }
      it->second.where[s] = static_cast<std::ptrdiff_t>(r);
    }
  }

  std::vector<const Slot*> kept;
  std::vector<std::size_t> joined_per_set(sets.size(), 0);
  for (const auto& [id, slot] : index) {
    const bool complete = std::all_of(slot.where.begin(), slot.where.end(),
                                      [](std::ptrdiff_t w) { return w >= 0; });
    if (complete) {
      out.ids.push_back(id);
      out.labels.push_back(slot.label);
      kept.push_back(&slot);
    } else {
      ++out.diagnostics.dropped;
    }
  }

  const auto n = static_cast<Eigen::Index>(kept.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    Eigen::MatrixXf m(out.dims[s], n);
    for (Eigen::Index c = 0; c < n; ++c) {
      m.col(c) = sets[s].records[static_cast<std::size_t>(kept[c]->where[s])].vector;
    }
    out.features.push_back(std::move(m));
    out.diagnostics.dropped_per_set.push_back(sets[s].records.size() - kept.size());
  }
  out.diagnostics.rows = kept.size();
  return out;
}

}  // namespace factprobe
