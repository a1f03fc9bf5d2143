#pragma once

// Pooled embedding records, the PFEMB001 file format and multi-setup joins.
//
// File layout (all integers little-endian):
//   "PFEMB001"
//   u32 header length, UTF-8 JSON header
//     {count, dataset, format_version, input_setup, ndim, source_model, split}
//   count x ( u32 id length | id bytes | u8 label | ndim x f32 )
//   u64 CRC-64/XZ of the record bytes

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factprobe/types.hpp"

namespace factprobe {

inline constexpr std::string_view kEmbeddingMagic = "PFEMB001";
inline constexpr int kEmbeddingFormatVersion = 1;

struct PooledEmbedding {
  std::string instance_id;
  Eigen::VectorXf vector;
  Label label = Label::Supported;

  friend bool operator==(const PooledEmbedding& a, const PooledEmbedding& b) {
    return a.instance_id == b.instance_id && a.label == b.label &&
           a.vector.size() == b.vector.size() && a.vector == b.vector;
  }
};

struct EmbeddingManifest {
  DatasetId dataset = DatasetId::Mocheg;
  Split split = Split::Train;
  InputSetup input_setup = InputSetup::MmClaim;
  std::string source_model;
  std::uint32_t ndim = 0;
  std::uint64_t count = 0;
  int format_version = kEmbeddingFormatVersion;

  friend bool operator==(const EmbeddingManifest&, const EmbeddingManifest&) = default;
};

struct EmbeddingSet {
  EmbeddingManifest manifest;
  std::vector<PooledEmbedding> records;
};

/// Column means of an ntokens x ndim hidden-state matrix, accumulated in
/// double. Throws InvalidArgument on an empty matrix or a non-finite entry.
template <typename Derived>
Eigen::VectorXd mean_pool(const Eigen::MatrixBase<Derived>& tokens) {
  if (tokens.rows() == 0 || tokens.cols() == 0) throw InvalidArgument("empty token sequence");
  for (Eigen::Index j = 0; j < tokens.cols(); ++j) {
    for (Eigen::Index i = 0; i < tokens.rows(); ++i) {
      if (!std::isfinite(static_cast<double>(tokens(i, j)))) {
        throw InvalidArgument("non-finite value at row " + std::to_string(i) + ", column " +
                              std::to_string(j));
      }
    }
  }
  return tokens.template cast<double>().colwise().sum().transpose() /
         static_cast<double>(tokens.rows());
}

/// CRC-64/XZ.
std::uint64_t crc64(std::string_view bytes);

/// Serializes a set. Records are written in ascending instance_id order.
/// Throws InvalidArgument on dimension mismatch, duplicate ids, count
/// mismatch or non-finite values.
std::string encode_embedding_set(const EmbeddingManifest& manifest,
                                 std::span<const PooledEmbedding> records);

/// Parses and validates a serialized set. Throws FormatError with one of
/// "bad magic", "truncated payload", "count mismatch", "checksum mismatch",
/// "non-finite value", "invalid label" or a header diagnostic.
EmbeddingSet decode_embedding_set(std::string_view bytes);

void write_embedding_set(const EmbeddingManifest& manifest,
                         std::span<const PooledEmbedding> records, const std::string& path);

EmbeddingSet read_embedding_set(const std::string& path);

struct JoinDiagnostics {
  std::size_t rows = 0;
  // Distinct ids present in at least one set but not in all of them.
  std::size_t dropped = 0;
  // Per input set, how many of its records were not joined.
  std::vector<std::size_t> dropped_per_set;
};

/// Instances aligned across several input setups. features[s] holds setup s
/// as a dims[s] x size() matrix, one column per instance.
struct JoinedDataset {
  DatasetId dataset = DatasetId::Mocheg;
  Split split = Split::Train;
  std::vector<InputSetup> setups;
  std::vector<int> dims;
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<Eigen::MatrixXf> features;
  JoinDiagnostics diagnostics;

  std::size_t size() const { return ids.size(); }
  std::size_t num_setups() const { return setups.size(); }

  /// Rows at the given indices, in the given order.
  JoinedDataset subset(std::span<const std::size_t> indices) const;

  /// All setups stacked vertically: (sum of dims) x size().
  Eigen::MatrixXf stacked() const;

  std::array<std::size_t, kNumClasses> class_counts() const;
};

/// Inner join on instance_id. Rows come out in ascending id order and the
/// per-row vectors follow the order of `sets`. Throws InvalidArgument on
/// mixed dataset/split, repeated setups, or "label conflict: <id>".
JoinedDataset join_setups(std::span<const EmbeddingSet> sets);

}  // namespace factprobe
