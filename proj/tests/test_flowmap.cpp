#include "doctest.h"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "repdistill/error.hpp"
#include "repdistill/flowmap.hpp"
#include "test_util.hpp"

using namespace repdistill;
using doctest::Approx;
using testutil::error_code_of;

namespace {

Clustering labels(const std::vector<std::string>& ids, const std::vector<std::size_t>& lab,
                  std::size_t k) {
  Clustering c;
  c.k = k;
  for (std::size_t i = 0; i < ids.size(); ++i) c.assignments[ids[i]] = lab[i];
  return c;
}

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
  return ids;
}

// A flow matrix whose single row has the given counts.
FlowMatrix single_row(const std::vector<std::size_t>& row) {
  std::vector<std::size_t> src, tgt;
  for (std::size_t j = 0; j < row.size(); ++j) {
    for (std::size_t c = 0; c < row[j]; ++c) {
      src.push_back(0);
      tgt.push_back(j);
    }
  }
  const auto ids = make_ids(src.size());
  return compute_flow(ids, labels(ids, src, 1), labels(ids, tgt, row.size()),
                      FlowDirection::EncoderToEmbedding);
}

}  // namespace

TEST_CASE("hand tally") {
  const auto ids = make_ids(10);
  const FlowMatrix f = compute_flow(ids, labels(ids, {0, 0, 0, 0, 0, 0, 0, 1, 1, 1}, 2),
                                    labels(ids, std::vector<std::size_t>(10, 0), 1),
                                    FlowDirection::EmbeddingToEncoder);
  CHECK(f.counts == std::vector<std::vector<std::uint64_t>>{{7}, {3}});
  CHECK(f.row_pct == std::vector<std::vector<double>>{{100.0}, {100.0}});
  CHECK(f.n == 10);
  CHECK(f.source_space == Space::Embedding);
  CHECK(f.target_space == Space::Encoder);
}

TEST_CASE("identical labelings give a diagonal") {
  const auto ids = make_ids(12);
  std::vector<std::size_t> lab;
  for (std::size_t i = 0; i < 12; ++i) lab.push_back(i % 4);
  const FlowMatrix f = compute_flow(ids, labels(ids, lab, 4), labels(ids, lab, 4),
                                    FlowDirection::EmbeddingToEncoder);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(f.counts[i][j] == (i == j ? 3u : 0u));
    CHECK(f.row_pct[i][i] == 100.0);
  }
}

TEST_CASE("empty rows are flagged and produce no targets") {
  const auto ids = make_ids(4);
  const FlowMatrix f = compute_flow(ids, labels(ids, {0, 0, 2, 2}, 3),
                                    labels(ids, {0, 1, 1, 1}, 2),
                                    FlowDirection::EmbeddingToEncoder);
  CHECK(f.empty_rows == std::vector<bool>{false, true, false});
  CHECK(f.row_pct[1] == std::vector<double>{0.0, 0.0});
  CHECK(top_targets(f, 1, 2).empty());
  CHECK(error_code_of([&] { top_targets(f, 3, 1); }) == ErrorCode::RowOutOfRange);
}

TEST_CASE("top targets") {
  const FlowMatrix f = single_row({70, 20, 10});
  const auto top = top_targets(f, 0, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == std::pair<std::size_t, double>{0, 70.0});
  CHECK(top[1] == std::pair<std::size_t, double>{1, 20.0});
  CHECK(top_targets(f, 0, 9).size() == 3);

  const auto tied = top_targets(single_row({1, 3, 3}), 0, 3);
  CHECK(tied[0].first == 1);
  CHECK(tied[1].first == 2);
  CHECK(tied[2].first == 0);
}

TEST_CASE("saturation index") {
  CHECK(saturation_index(single_row({50, 30, 20}), 2) == Approx(80.0));
  CHECK(saturation_index(single_row({0, 9, 0}), 1) == 100.0);
  CHECK(saturation_index(single_row({5, 5, 5, 5}), 1) == Approx(25.0));
}

TEST_CASE("errors") {
  const auto ids = make_ids(3);
  const std::vector<std::string> none;
  CHECK(error_code_of([&] {
          compute_flow(none, labels(ids, {0, 0, 0}, 1), labels(ids, {0, 0, 0}, 1),
                       FlowDirection::EmbeddingToEncoder);
        }) == ErrorCode::EmptyPairs);
  Clustering partial = labels(ids, {0, 0, 0}, 1);
  partial.assignments.erase("s1");
  CHECK(error_code_of([&] {
          compute_flow(ids, labels(ids, {0, 0, 0}, 1), partial,
                       FlowDirection::EmbeddingToEncoder);
        }) == ErrorCode::MissingAssignment);
}

TEST_CASE("percent formatting uses integer arithmetic") {
  CHECK(format_percent(1, 3) == "33.33");
  CHECK(format_percent(2, 3) == "66.67");
  CHECK(format_percent(1, 8) == "12.50");
  CHECK(format_percent(1, 16) == "6.25");
  CHECK(format_percent(1, 32) == "3.13");  // 3.125 rounds up
  CHECK(format_percent(0, 5) == "0.00");
  CHECK(format_percent(5, 5) == "100.00");
}

TEST_CASE("random labelings: row sums and transpose") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 200, ka = 1 + gen() % 9, kb = 1 + gen() % 9;
    const auto ids = make_ids(n);
    std::vector<std::size_t> la(n), lb(n);
    for (std::size_t i = 0; i < n; ++i) { la[i] = gen() % ka; lb[i] = gen() % kb; }
    const Clustering a = labels(ids, la, ka), b = labels(ids, lb, kb);
    const FlowMatrix fwd = compute_flow(ids, a, b, FlowDirection::EmbeddingToEncoder);
    const FlowMatrix rev = compute_flow(ids, b, a, FlowDirection::EncoderToEmbedding);
    REQUIRE(fwd.rows() == ka);
    REQUIRE(fwd.cols() == kb);
    for (std::size_t i = 0; i < ka; ++i) {
      if (fwd.empty_rows[i]) continue;
      double sum = 0;
      for (double v : fwd.row_pct[i]) sum += v;
      CHECK(std::abs(sum - 100.0) <= 1e-6);
      for (std::size_t j = 0; j < kb; ++j) CHECK(fwd.counts[i][j] == rev.counts[j][i]);
    }
  }
}

TEST_CASE("serialization") {
  const FlowMatrix f = single_row({2, 0, 1});
  const auto j = to_json(f);
  CHECK(j.at("direction") == "enc2emb");
  CHECK(to_csv(f) == "source,target,count,percent\n0,0,2,66.67\n0,2,1,33.33\n");
  CHECK(parse_direction("emb2enc") == FlowDirection::EmbeddingToEncoder);
}
