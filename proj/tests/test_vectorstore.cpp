#include "doctest.h"

#include <fstream>
#include <random>
#include <set>

#include "repdistill/error.hpp"
#include "repdistill/vectorstore.hpp"
#include "test_util.hpp"

using namespace repdistill;
using testutil::error_code_of;
using testutil::make_set;
using testutil::scratch_dir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

VectorSet random_set(std::mt19937_64& gen, Space space, bool f32_exact) {
  std::uniform_int_distribution<int> size(1, 20), dim(1, 9);
  std::normal_distribution<double> val(0.0, 3.0);
  VectorSetHeader h;
  h.space = space;
  h.model_tag = "tag-" + std::to_string(gen() % 100);
  h.epoch = static_cast<std::uint32_t>(gen() % 50);
  h.dim = static_cast<std::uint32_t>(dim(gen));
  const int n = size(gen);
  std::vector<std::string> ids;
  std::vector<double> values;
  for (int i = 0; i < n; ++i) {
    ids.push_back("id/" + std::to_string(gen() % 1000000) + "_" + std::to_string(i));
    for (std::uint32_t d = 0; d < h.dim; ++d) {
      const double v = val(gen);
      values.push_back(f32_exact ? static_cast<double>(static_cast<float>(v)) : v);
    }
  }
  return VectorSet::create(h, ids, values);
}

}  // namespace

TEST_CASE("jsonl header with dim 3 and two records loads") {
  const auto dir = scratch_dir("vs_load");
  write_text(dir / "a.jsonl",
             R"({"dim": 3, "space": "encoder", "model_tag": "m", "epoch": 4})"
             "\n"
             R"({"id": "x", "vec": [1, 2, 3]})"
             "\n"
             R"({"id": "y", "vec": [0.5, -1e-3, 7]})"
             "\n");
  const VectorSet s = load_vector_set(dir / "a.jsonl", VectorFormat::Jsonl);
  CHECK(s.dim() == 3);
  CHECK(s.size() == 2);
  CHECK(s.space() == Space::Encoder);
  CHECK(s.epoch() == 4);
  CHECK(s.model_tag() == "m");
  CHECK(s.row(1)[1] == -1e-3);
  CHECK(s.find("y") == 1);
  CHECK(s.find("z") == VectorSet::npos);
}

TEST_CASE("jsonl validation errors") {
  const auto dir = scratch_dir("vs_errors");
  const std::string header = R"({"dim": 3, "space": "embedding"})" "\n";

  write_text(dir / "short.jsonl", header + R"({"id": "bad", "vec": [1, 2]})" "\n");
  CHECK(error_code_of([&] { load_vector_set(dir / "short.jsonl", VectorFormat::Jsonl); }) ==
        ErrorCode::DimensionMismatch);
  try {
    load_vector_set(dir / "short.jsonl", VectorFormat::Jsonl);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'bad'") != std::string::npos);
  }

  write_text(dir / "nodim.jsonl", R"({"space": "embedding"})" "\n");
  CHECK(error_code_of([&] { load_vector_set(dir / "nodim.jsonl", VectorFormat::Jsonl); }) ==
        ErrorCode::MalformedHeader);

  write_text(dir / "nospace.jsonl", R"({"dim": 2})" "\n");
  CHECK(error_code_of([&] { load_vector_set(dir / "nospace.jsonl", VectorFormat::Jsonl); }) ==
        ErrorCode::MalformedHeader);

  write_text(dir / "dup.jsonl", header + R"({"id": "a", "vec": [1, 2, 3]})" "\n" +
                                    R"({"id": "a", "vec": [1, 2, 3]})" "\n");
  CHECK(error_code_of([&] { load_vector_set(dir / "dup.jsonl", VectorFormat::Jsonl); }) ==
        ErrorCode::DuplicateId);

  write_text(dir / "inf.jsonl", header + R"({"id": "a", "vec": [1, 1e999, 3]})" "\n");
  CHECK(error_code_of([&] { load_vector_set(dir / "inf.jsonl", VectorFormat::Jsonl); }) ==
        ErrorCode::NonFiniteValue);

  write_text(dir / "null.jsonl", header + R"({"id": "a", "vec": [1, null, 3]})" "\n");
  CHECK(error_code_of([&] { load_vector_set(dir / "null.jsonl", VectorFormat::Jsonl); }) ==
        ErrorCode::NonFiniteValue);

  CHECK(error_code_of([&] { load_vector_set(dir / "missing.jsonl", VectorFormat::Jsonl); }) ==
        ErrorCode::IoFailure);
}

TEST_CASE("binary layout matches the documented byte format") {
  const auto dir = scratch_dir("vs_layout");
  const VectorSet s = make_set({{"ab", {1.0, -2.0}}}, Space::Encoder, 7);
  save_vector_set(s, dir / "s.bin", VectorFormat::Binary);
  std::ifstream in(dir / "s.bin", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string expected =
      std::string("VDST") + std::string("\x01\x00\x00\x00", 4) + std::string("\x01", 1) +
      std::string("\x07\x00\x00\x00", 4) + std::string("\x02\x00\x00\x00", 4) +
      std::string("\x01\x00\x00\x00\x00\x00\x00\x00", 8) + std::string("\x02\x00\x00\x00", 4) +
      "ab" + std::string("\x00\x00\x80\x3f", 4) + std::string("\x00\x00\x00\xc0", 4);
  CHECK(bytes == expected);
}

TEST_CASE("binary validation errors carry byte offsets") {
  const auto dir = scratch_dir("vs_binerr");
  write_text(dir / "magic.bin", "XXXX");
  CHECK(error_code_of([&] { load_vector_set(dir / "magic.bin", VectorFormat::Binary); }) ==
        ErrorCode::MalformedHeader);

  const VectorSet s = make_set({{"a", {1.0, 2.0}}, {"b", {3.0, 4.0}}});
  save_vector_set(s, dir / "ok.bin", VectorFormat::Binary);
  std::ifstream in(dir / "ok.bin", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  write_text(dir / "trunc.bin", bytes.substr(0, bytes.size() - 2));
  CHECK(error_code_of([&] { load_vector_set(dir / "trunc.bin", VectorFormat::Binary); }) ==
        ErrorCode::MalformedHeader);

  std::string nan = bytes;
  const std::size_t last = nan.size() - 4;
  nan.replace(last, 4, std::string("\x00\x00\xc0\x7f", 4));  // quiet NaN
  write_text(dir / "nan.bin", nan);
  try {
    load_vector_set(dir / "nan.bin", VectorFormat::Binary);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteValue);
    CHECK(std::string(e.what()).find("offset " + std::to_string(last)) != std::string::npos);
  }
}

TEST_CASE("round-trip save/load is exact in both formats") {
  std::mt19937_64 gen(42);
  const auto dir = scratch_dir("vs_roundtrip");
  for (int trial = 0; trial < 50; ++trial) {
    const VectorSet s = random_set(gen, trial % 2 ? Space::Encoder : Space::Embedding, false);
    save_vector_set(s, dir / "s.jsonl", VectorFormat::Jsonl);
    CHECK(load_vector_set(dir / "s.jsonl", VectorFormat::Jsonl) == s);

    // The binary format stores f32 and carries no model tag.
    const VectorSet f = random_set(gen, Space::Encoder, true);
    save_vector_set(f, dir / "s.bin", VectorFormat::Binary);
    const VectorSet back = load_vector_set(dir / "s.bin", VectorFormat::Binary);
    CHECK(back.model_tag().empty());
    VectorSetHeader h = f.header();
    h.model_tag.clear();
    CHECK(back == VectorSet::create(h, f.ids(), {f.values().begin(), f.values().end()}));
  }
}

TEST_CASE("save to an unwritable path fails with IoFailure") {
  const VectorSet s = make_set({{"a", {1.0}}});
  CHECK(error_code_of([&] {
          save_vector_set(s, "/nonexistent-dir/x/y.jsonl", VectorFormat::Jsonl);
        }) == ErrorCode::IoFailure);
  CHECK(error_code_of([&] {
          save_vector_set(s, "/nonexistent-dir/x/y.bin", VectorFormat::Binary);
        }) == ErrorCode::IoFailure);
}

TEST_CASE("align_spaces intersects ids and reports the rest") {
  const VectorSet emb = make_set({{"c", {1.0}}, {"a", {2.0}}, {"b", {3.0}}}, Space::Embedding);
  const VectorSet enc = make_set({{"d", {4.0}}, {"c", {5.0}}, {"b", {6.0}}}, Space::Encoder);
  const Alignment al = align_spaces(emb, enc);
  REQUIRE(al.pairs.size() == 2);
  CHECK(al.pairs[0].id == "b");
  CHECK(al.pairs[1].id == "c");
  CHECK(al.pairs[0].emb.vec[0] == 3.0);
  CHECK(al.pairs[0].enc.vec[0] == 6.0);
  CHECK(al.pairs[1].emb.id == "c");
  CHECK(al.only_embedding == std::vector<std::string>{"a"});
  CHECK(al.only_encoder == std::vector<std::string>{"d"});

  CHECK(align_spaces(emb, make_set({{"a", {0.0}}, {"b", {0.0}}, {"c", {0.0}}}, Space::Encoder))
            .pairs.size() == 3);
  CHECK(error_code_of([&] {
          align_spaces(emb, make_set({{"x", {1.0}}}, Space::Encoder));
        }) == ErrorCode::EmptyIntersection);
  CHECK(error_code_of([&] { align_spaces(enc, emb); }) == ErrorCode::SpaceMismatch);
}

TEST_CASE("alignment size equals the id intersection size") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> a, b;
    std::vector<double> va, vb;
    std::set<std::string> sa, sb;
    for (int i = 0; i < 40; ++i) {
      std::string id = "k" + std::to_string(gen() % 60);
      if (sa.insert(id).second) { a.push_back(id); va.push_back(1.0); }
      id = "k" + std::to_string(gen() % 60);
      if (sb.insert(id).second) { b.push_back(id); vb.push_back(1.0); }
    }
    VectorSetHeader he{Space::Embedding, "", 0, 1}, hn{Space::Encoder, "", 0, 1};
    std::size_t common = 0;
    for (const auto& id : sa) common += sb.count(id);
    if (common == 0) continue;
    CHECK(align_spaces(VectorSet::create(he, a, va), VectorSet::create(hn, b, vb)).pairs.size() ==
          common);
  }
}
