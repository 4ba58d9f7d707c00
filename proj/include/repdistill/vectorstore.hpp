#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace repdistill {

enum class Space : std::uint8_t { Embedding = 0, Encoder = 1 };

std::string_view to_string(Space space);
Space parse_space(std::string_view text);

enum class VectorFormat { Jsonl, Binary };

VectorFormat parse_format(std::string_view text);
// .jsonl / .json -> Jsonl, anything else -> Binary.
VectorFormat format_from_extension(const std::filesystem::path& path);

// A single row of the feature matrix: borrowed from its parent set.
struct VectorRecord {
  std::string_view id;
  std::span<const double> vec;
};

struct VectorSetHeader {
  Space space = Space::Embedding;
  std::string model_tag;
  std::uint32_t epoch = 0;
  std::uint32_t dim = 0;
};

// Immutable, validated collection of per-sample vectors sharing one
// representation space. Values are stored row-major as 64-bit floats.
class VectorSet {
 public:
  VectorSet() = default;

  // Validates dimension, finiteness and id uniqueness; throws Error.
  static VectorSet create(VectorSetHeader header, std::vector<std::string> ids,
                          std::vector<double> values);

  Space space() const noexcept { return header_.space; }
  const std::string& model_tag() const noexcept { return header_.model_tag; }
  std::uint32_t epoch() const noexcept { return header_.epoch; }
  std::size_t dim() const noexcept { return header_.dim; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const VectorSetHeader& header() const noexcept { return header_; }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const double> row(std::size_t index) const {
    return std::span<const double>(values_).subspan(index * header_.dim,
                                                    header_.dim);
  }
  VectorRecord record(std::size_t index) const {
    return {ids_[index], row(index)};
  }

  // Record index for an id, or npos.
  std::size_t find(std::string_view id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Payload equality: header, ids in order, and bit-exact values.
  friend bool operator==(const VectorSet& a, const VectorSet& b);

 private:
  VectorSetHeader header_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

VectorSet load_vector_set(const std::filesystem::path& path,
                          VectorFormat format);
void save_vector_set(const VectorSet& set, const std::filesystem::path& path,
                     VectorFormat format);

struct AlignedPair {
  std::string id;
  VectorRecord emb;
  VectorRecord enc;
};

struct Alignment {
  std::vector<AlignedPair> pairs;  // sorted by id, byte order
  std::vector<std::string> only_embedding;
  std::vector<std::string> only_encoder;
};

// Pairs borrow from both sets, which must outlive the result.
Alignment align_spaces(const VectorSet& emb, const VectorSet& enc);

}  // namespace repdistill
