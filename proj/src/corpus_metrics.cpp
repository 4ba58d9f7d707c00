#include "repdistill/corpus_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fileio.hpp"
#include "repdistill/error.hpp"

namespace repdistill {

using json = nlohmann::json;

namespace {

// Byte length of the whitespace code point starting at text[i], or 0.
std::size_t whitespace_at(std::string_view text, std::size_t i) {
  const auto b = [&](std::size_t k) -> unsigned char {
    return i + k < text.size() ? static_cast<unsigned char>(text[i + k]) : 0;
  };
  const unsigned char c = b(0);
  if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return 1;
  if (c == 0xC2 && (b(1) == 0x85 || b(1) == 0xA0)) return 2;
  if (c == 0xE1 && b(1) == 0x9A && b(2) == 0x80) return 3;  // U+1680
  if (c == 0xE2 && b(1) == 0x80 &&
      ((b(2) >= 0x80 && b(2) <= 0x8A) || b(2) == 0xA8 || b(2) == 0xA9 ||
       b(2) == 0xAF)) {
    return 3;  // U+2000..200A, U+2028, U+2029, U+202F
  }
  if (c == 0xE2 && b(1) == 0x81 && b(2) == 0x9F) return 3;  // U+205F
  if (c == 0xE3 && b(1) == 0x80 && b(2) == 0x80) return 3;  // U+3000
  return 0;
}

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

std::string normalize_token(std::string_view raw) {
  std::size_t lo = 0;
  std::size_t hi = raw.size();
  while (lo < hi && is_ascii_punct(raw[lo])) ++lo;
  while (hi > lo && is_ascii_punct(raw[hi - 1])) --hi;
  std::string out(raw.substr(lo, hi - lo));
  for (auto& ch : out) {
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

using NgramCounts = std::unordered_map<std::string, std::size_t>;

// n-grams keyed by their tokens joined with a unit separator.
NgramCounts ngram_counts(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key += '\x1f';
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

double harmonic(double p, double r) {
  return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t total_tokens(std::span<const Tokens> docs) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t ws = 0;
    while (i < text.size() && (ws = whitespace_at(text, i)) > 0) i += ws;
    const std::size_t start = i;
    while (i < text.size() && whitespace_at(text, i) == 0) ++i;
    if (i > start) {
      std::string tok = normalize_token(text.substr(start, i - start));
      if (!tok.empty()) out.push_back(std::move(tok));
    }
  }
  return out;
}

std::vector<Tokens> split_sentences(std::string_view text) {
  std::vector<Tokens> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 < text.size() && whitespace_at(text, i + 1) == 0) continue;
    Tokens t = tokenize(text.substr(start, i + 1 - start));
    if (!t.empty()) out.push_back(std::move(t));
    start = i + 1;
  }
  if (start < text.size()) {
    Tokens t = tokenize(text.substr(start));
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string_view to_string(RougeVariant variant) {
  switch (variant) {
    case RougeVariant::R1: return "R1";
    case RougeVariant::R2: return "R2";
    case RougeVariant::RL: return "RL";
  }
  return "?";
}

RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const std::string> reference, std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::InvalidArgument, "ROUGE-N needs n >= 1");
  }
  RougeScore s;
  s.variant = n == 1 ? RougeVariant::R1 : RougeVariant::R2;
  const NgramCounts cand = ngram_counts(candidate, n);
  const NgramCounts ref = ngram_counts(reference, n);
  const std::size_t cand_total =
      candidate.size() >= n ? candidate.size() - n + 1 : 0;
  const std::size_t ref_total =
      reference.size() >= n ? reference.size() - n + 1 : 0;
  if (cand_total == 0 || ref_total == 0) {
    s.degenerate = true;
    return s;
  }
  std::size_t overlap = 0;
  for (const auto& [gram, c] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  s.precision = 100.0 * static_cast<double>(overlap) / static_cast<double>(cand_total);
  s.recall = 100.0 * static_cast<double>(overlap) / static_cast<double>(ref_total);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference) {
  RougeScore s;
  s.variant = RougeVariant::RL;
  if (candidate.empty() || reference.empty()) {
    s.degenerate = true;
    return s;
  }
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  s.precision = 100.0 * lcs / static_cast<double>(candidate.size());
  s.recall = 100.0 * lcs / static_cast<double>(reference.size());
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

double abstractness(std::span<const std::string> summary,
                    std::span<const Tokens> sources, std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::InvalidArgument, "n-gram order must be >= 1");
  }
  if (summary.size() < n) {
    throw Error(ErrorCode::TooShort,
                fmt::format("summary has {} tokens, needs {}", summary.size(), n));
  }
  std::unordered_set<std::string> seen;
  for (const auto& src : sources) {
    for (auto& [gram, c] : ngram_counts(src, n)) seen.insert(gram);
  }
  std::size_t novel = 0;
  std::size_t total = 0;
  for (const auto& [gram, c] : ngram_counts(summary, n)) {
    total += c;
    if (!seen.contains(gram)) novel += c;
  }
  return 100.0 * static_cast<double>(novel) / static_cast<double>(total);
}

double compression(std::span<const Tokens> sources,
                   std::span<const std::string> reference) {
  if (reference.empty()) {
    throw Error(ErrorCode::EmptyReference, "reference has no tokens");
  }
  return static_cast<double>(total_tokens(sources)) /
         static_cast<double>(reference.size());
}

double inter_doc_similarity(std::span<const Tokens> units) {
  if (units.size() < 2) {
    throw Error(ErrorCode::NotEnoughUnits,
                fmt::format("{} comparison unit(s), need 2", units.size()));
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    for (std::size_t j = i + 1; j < units.size(); ++j) {
      sum += rouge_n(units[i], units[j], 2).f1;
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

CorpusDoc make_corpus_doc(std::string id, std::span<const std::string> sources,
                          std::string_view reference) {
  CorpusDoc doc;
  doc.id = std::move(id);
  for (const auto& s : sources) {
    doc.sources.push_back(tokenize(s));
    doc.source_sentences.push_back(split_sentences(s));
  }
  doc.reference = tokenize(reference);
  return doc;
}

std::vector<Tokens> similarity_units(const CorpusDoc& doc, std::size_t window) {
  if (doc.sources.size() >= 2) return doc.sources;
  std::vector<Tokens> units;
  if (doc.source_sentences.empty() || window == 0) return units;
  const auto& sentences = doc.source_sentences.front();
  for (std::size_t i = 0; i < sentences.size(); i += window) {
    Tokens unit;
    for (std::size_t j = i; j < std::min(i + window, sentences.size()); ++j) {
      unit.insert(unit.end(), sentences[j].begin(), sentences[j].end());
    }
    units.push_back(std::move(unit));
  }
  return units;
}

CorpusStats corpus_stats(std::span<const CorpusDoc> corpus) {
  if (corpus.empty()) {
    throw Error(ErrorCode::InvalidArgument, "corpus is empty");
  }
  CorpusStats st;
  st.n_docs = corpus.size();
  // Sums in document order, divided once.
  long double src = 0, sum = 0, sim = 0, compr = 0, abstr = 0;
  auto record = [&](const CorpusDoc& doc, const char* metric, const Error& e) {
    st.failures.push_back({doc.id, metric, e.what()});
  };
  for (const auto& doc : corpus) {
    src += static_cast<long double>(total_tokens(doc.sources));
    sum += static_cast<long double>(doc.reference.size());
    try {
      compr += compression(doc.sources, doc.reference);
      ++st.compression_docs;
    } catch (const Error& e) {
      record(doc, "compression", e);
    }
    try {
      abstr += abstractness(doc.reference, doc.sources, 3);
      ++st.abstractness_docs;
    } catch (const Error& e) {
      record(doc, "abstractness", e);
    }
    try {
      sim += inter_doc_similarity(similarity_units(doc));
      ++st.inter_sim_docs;
    } catch (const Error& e) {
      record(doc, "inter_sim", e);
    }
  }
  auto mean = [](long double total, std::size_t count) {
    return count ? static_cast<double>(total / static_cast<long double>(count))
                 : 0.0;
  };
  st.avg_src_tokens = mean(src, st.n_docs);
  st.avg_sum_tokens = mean(sum, st.n_docs);
  st.compression = mean(compr, st.compression_docs);
  st.abstractness_3gram = mean(abstr, st.abstractness_docs);
  st.inter_sim = mean(sim, st.inter_sim_docs);
  return st;
}

std::vector<CorpusDoc> load_corpus(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<CorpusDoc> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out.push_back(make_corpus_doc(
          j.at("id").get<std::string>(),
          j.at("sources").get<std::vector<std::string>>(),
          j.at("reference").get<std::string>()));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

std::string stats_csv(const CorpusStats& st, std::string_view dataset) {
  return fmt::format(
      "dataset,n_docs,a_src,a_sum,inter_sim,compr,abstr\n"
      "{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f}\n",
      detail::csv_field(std::string(dataset)), st.n_docs, st.avg_src_tokens,
      st.avg_sum_tokens, st.inter_sim, st.compression, st.abstractness_3gram);
}

std::vector<ScoredPair> score_pairs_file(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<ScoredPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const Tokens cand = tokenize(j.at("candidate").get<std::string>());
      const Tokens ref = tokenize(j.at("reference").get<std::string>());
      out.push_back({j.at("id").get<std::string>(), rouge_n(cand, ref, 1),
                     rouge_n(cand, ref, 2), rouge_l(cand, ref)});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

std::string scores_csv(std::span<const ScoredPair> scores) {
  std::string out = "id,variant,precision,recall,f1\n";
  for (const auto& s : scores) {
    for (const RougeScore* r : {&s.r1, &s.r2, &s.rl}) {
      out += fmt::format("{},{},{:.4f},{:.4f},{:.4f}\n", detail::csv_field(s.id),
                         to_string(r->variant), r->precision, r->recall, r->f1);
    }
  }
  return out;
}

}  // namespace repdistill
