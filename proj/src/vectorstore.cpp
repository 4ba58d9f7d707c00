#include "repdistill/vectorstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fileio.hpp"
#include "repdistill/error.hpp"

namespace repdistill {

using json = nlohmann::json;
using detail::read_file;
using detail::write_file;

namespace {

constexpr char kMagic[4] = {'V', 'D', 'S', 'T'};
constexpr std::uint32_t kBinaryVersion = 1;

static_assert(std::numeric_limits<float>::is_iec559);

// Little-endian writers; the format is fixed LE regardless of host order.
template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::MalformedHeader,
                  std::string("truncated ") + what + " at byte offset " +
                      std::to_string(pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

VectorSet load_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::MalformedHeader, "empty file " + path.string());
  }

  VectorSetHeader header;
  try {
    const json h = json::parse(line);
    if (!h.is_object() || !h.contains("dim") || !h.contains("space")) {
      throw Error(ErrorCode::MalformedHeader, "header needs dim and space");
    }
    const auto dim = h.at("dim").get<std::int64_t>();
    if (dim <= 0 || dim > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::MalformedHeader, "dim must be positive");
    }
    header.dim = static_cast<std::uint32_t>(dim);
    header.space = parse_space(h.at("space").get<std::string>());
    header.model_tag = h.value("model_tag", std::string());
    const auto epoch = h.value("epoch", std::int64_t{0});
    if (epoch < 0 || epoch > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::MalformedHeader, "epoch out of range");
    }
    header.epoch = static_cast<std::uint32_t>(epoch);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) {
      throw Error(ErrorCode::MalformedHeader, e.what());
    }
    throw;
  }

  std::vector<std::string> ids;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::out_of_range& e) {
      // Literals such as 1e999 overflow to infinity.
      throw Error(ErrorCode::NonFiniteValue,
                  "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedHeader,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("vec") ||
        !rec.at("id").is_string() || !rec.at("vec").is_array()) {
      throw Error(ErrorCode::MalformedHeader,
                  "line " + std::to_string(line_no) + ": expected {id, vec}");
    }
    auto id = rec.at("id").get<std::string>();
    const auto& vec = rec.at("vec");
    if (vec.size() != header.dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "record '" + id + "' has length " +
                      std::to_string(vec.size()) + ", expected " +
                      std::to_string(header.dim));
    }
    for (const auto& v : vec) {
      if (!v.is_number()) {
        throw Error(ErrorCode::NonFiniteValue,
                    "record '" + id + "' holds a non-numeric entry");
      }
      values.push_back(v.get<double>());
    }
    ids.push_back(std::move(id));
  }
  return VectorSet::create(std::move(header), std::move(ids), std::move(values));
}

VectorSet load_binary(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes);
  const std::string magic = r.get_bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::MalformedHeader, "bad magic at byte offset 0");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kBinaryVersion) {
    throw Error(ErrorCode::MalformedHeader,
                "unsupported version " + std::to_string(version));
  }
  VectorSetHeader header;
  const auto space_offset = r.offset();
  const auto space = r.get<std::uint8_t>("space");
  if (space > 1) {
    throw Error(ErrorCode::MalformedHeader,
                "invalid space byte at offset " + std::to_string(space_offset));
  }
  header.space = static_cast<Space>(space);
  header.epoch = r.get<std::uint32_t>("epoch");
  header.dim = r.get<std::uint32_t>("dim");
  if (header.dim == 0) {
    throw Error(ErrorCode::MalformedHeader, "dim is zero");
  }
  const auto count = r.get<std::uint64_t>("count");

  // Each record needs at least 4 + 4*dim bytes; reject absurd counts early.
  const std::uint64_t min_record = 4 + 4ull * header.dim;
  if (count > (bytes.size() - r.offset()) / min_record) {
    throw Error(ErrorCode::MalformedHeader,
                "record count " + std::to_string(count) +
                    " exceeds file size");
  }

  std::vector<std::string> ids;
  std::vector<double> values;
  ids.reserve(count);
  values.reserve(count * header.dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id_len = r.get<std::uint32_t>("id_len");
    std::string id = r.get_bytes(id_len, "id");
    for (std::uint32_t d = 0; d < header.dim; ++d) {
      const auto offset = r.offset();
      const float f = std::bit_cast<float>(r.get<std::uint32_t>("vector"));
      if (!std::isfinite(f)) {
        throw Error(ErrorCode::NonFiniteValue,
                    "record '" + id + "' at byte offset " +
                        std::to_string(offset));
      }
      values.push_back(static_cast<double>(f));
    }
    ids.push_back(std::move(id));
  }
  if (!r.at_end()) {
    throw Error(ErrorCode::MalformedHeader,
                "trailing bytes at offset " + std::to_string(r.offset()));
  }
  return VectorSet::create(std::move(header), std::move(ids), std::move(values));
}

void save_jsonl(const VectorSet& set, const std::filesystem::path& path) {
  std::string out;
  json header = {{"dim", set.dim()},
                 {"space", std::string(to_string(set.space()))},
                 {"model_tag", set.model_tag()},
                 {"epoch", set.epoch()}};
  out += header.dump();
  out += '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto row = set.row(i);
    json rec = {{"id", set.ids()[i]},
                {"vec", std::vector<double>(row.begin(), row.end())}};
    out += rec.dump();
    out += '\n';
  }
  write_file(path, out);
}

void save_binary(const VectorSet& set, const std::filesystem::path& path) {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kBinaryVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(set.space()));
  put_le<std::uint32_t>(out, set.epoch());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
  put_le<std::uint64_t>(out, set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& id = set.ids()[i];
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    for (double v : set.row(i)) {
      put_le<std::uint32_t>(out,
                            std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  write_file(path, out);
}

}  // namespace

std::string_view to_string(Space space) {
  return space == Space::Embedding ? "embedding" : "encoder";
}

Space parse_space(std::string_view text) {
  if (text == "embedding") return Space::Embedding;
  if (text == "encoder") return Space::Encoder;
  throw Error(ErrorCode::InvalidArgument,
              "unknown space '" + std::string(text) + "'");
}

VectorFormat parse_format(std::string_view text) {
  if (text == "jsonl") return VectorFormat::Jsonl;
  if (text == "binary") return VectorFormat::Binary;
  throw Error(ErrorCode::InvalidArgument,
              "unknown format '" + std::string(text) + "'");
}

VectorFormat format_from_extension(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? VectorFormat::Jsonl
                                             : VectorFormat::Binary;
}

VectorSet VectorSet::create(VectorSetHeader header, std::vector<std::string> ids,
                            std::vector<double> values) {
  if (header.dim == 0) {
    throw Error(ErrorCode::MalformedHeader, "dim must be positive");
  }
  if (values.size() != ids.size() * header.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(values.size()) + " values for " +
                    std::to_string(ids.size()) + " records of dim " +
                    std::to_string(header.dim));
  }
  VectorSet set;
  set.index_.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) {
      throw Error(ErrorCode::MalformedHeader,
                  "empty id at record " + std::to_string(i));
    }
    if (!set.index_.emplace(ids[i], i).second) {
      throw Error(ErrorCode::DuplicateId, "'" + ids[i] + "'");
    }
    for (std::size_t d = 0; d < header.dim; ++d) {
      if (!std::isfinite(values[i * header.dim + d])) {
        throw Error(ErrorCode::NonFiniteValue,
                    "record '" + ids[i] + "' component " + std::to_string(d));
      }
    }
  }
  set.header_ = std::move(header);
  set.ids_ = std::move(ids);
  set.values_ = std::move(values);
  return set;
}

std::size_t VectorSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? npos : it->second;
}

bool operator==(const VectorSet& a, const VectorSet& b) {
  if (a.header_.space != b.header_.space || a.header_.epoch != b.header_.epoch ||
      a.header_.dim != b.header_.dim ||
      a.header_.model_tag != b.header_.model_tag || a.ids_ != b.ids_ ||
      a.values_.size() != b.values_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.values_[i]) !=
        std::bit_cast<std::uint64_t>(b.values_[i])) {
      return false;
    }
  }
  return true;
}

VectorSet load_vector_set(const std::filesystem::path& path,
                          VectorFormat format) {
  return format == VectorFormat::Jsonl ? load_jsonl(path) : load_binary(path);
}

void save_vector_set(const VectorSet& set, const std::filesystem::path& path,
                     VectorFormat format) {
  if (format == VectorFormat::Jsonl) {
    save_jsonl(set, path);
  } else {
    save_binary(set, path);
  }
}

Alignment align_spaces(const VectorSet& emb, const VectorSet& enc) {
  if (emb.space() != Space::Embedding) {
    throw Error(ErrorCode::SpaceMismatch, "first set must be embedding space");
  }
  if (enc.space() != Space::Encoder) {
    throw Error(ErrorCode::SpaceMismatch, "second set must be encoder space");
  }

  std::vector<std::string> emb_ids = emb.ids();
  std::vector<std::string> enc_ids = enc.ids();
  std::sort(emb_ids.begin(), emb_ids.end());
  std::sort(enc_ids.begin(), enc_ids.end());

  Alignment out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < emb_ids.size() || j < enc_ids.size()) {
    if (j == enc_ids.size() || (i < emb_ids.size() && emb_ids[i] < enc_ids[j])) {
      out.only_embedding.push_back(emb_ids[i++]);
    } else if (i == emb_ids.size() || enc_ids[j] < emb_ids[i]) {
      out.only_encoder.push_back(enc_ids[j++]);
    } else {
      const auto& id = emb_ids[i];
      out.pairs.push_back(
          {id, emb.record(emb.find(id)), enc.record(enc.find(id))});
      ++i;
      ++j;
    }
  }
  if (out.pairs.empty()) {
    throw Error(ErrorCode::EmptyIntersection,
                "embedding and encoder sets share no ids");
  }
  return out;
}

}  // namespace repdistill
