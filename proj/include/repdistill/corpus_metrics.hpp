#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repdistill {

using Tokens = std::vector<std::string>;

// Lowercase (ASCII), split on Unicode whitespace, strip leading and trailing
// ASCII punctuation; tokens left empty are dropped.
Tokens tokenize(std::string_view text);

// Splits raw text into sentences at . ! ? followed by whitespace, then
// tokenizes each; sentences with no tokens are dropped.
std::vector<Tokens> split_sentences(std::string_view text);

enum class RougeVariant { R1, R2, RL };

std::string_view to_string(RougeVariant variant);

struct RougeScore {
  RougeVariant variant = RougeVariant::R1;
  double precision = 0.0;  // all on the 0-100 scale
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // an input had no n-grams / tokens
};

// Clipped n-gram overlap.
RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const std::string> reference, std::size_t n);

// Sequence-level longest common subsequence.
RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference);

// Percent of summary n-grams (counted with multiplicity) that appear in no
// source. Throws TooShort when the summary has fewer than n tokens.
double abstractness(std::span<const std::string> summary,
                    std::span<const Tokens> sources, std::size_t n = 3);

// Total source tokens over reference tokens.
double compression(std::span<const Tokens> sources,
                   std::span<const std::string> reference);

// Mean pairwise ROUGE-2 F1 over all unordered pairs of units.
double inter_doc_similarity(std::span<const Tokens> units);

struct CorpusDoc {
  std::string id;
  std::vector<Tokens> sources;
  std::vector<std::vector<Tokens>> source_sentences;  // parallel to sources
  Tokens reference;
};

CorpusDoc make_corpus_doc(std::string id, std::span<const std::string> sources,
                          std::string_view reference);

// Units compared for inter-document similarity: the source documents when
// there are several, otherwise consecutive windows of `window` sentences of
// the single source.
std::vector<Tokens> similarity_units(const CorpusDoc& doc,
                                     std::size_t window = 3);

struct MetricFailure {
  std::string doc_id;
  std::string metric;
  std::string reason;
};

struct CorpusStats {
  std::size_t n_docs = 0;
  double avg_src_tokens = 0.0;
  double avg_sum_tokens = 0.0;
  double inter_sim = 0.0;
  double compression = 0.0;
  double abstractness_3gram = 0.0;
  // Each metric is averaged over the documents where it is defined.
  std::size_t inter_sim_docs = 0;
  std::size_t compression_docs = 0;
  std::size_t abstractness_docs = 0;
  std::vector<MetricFailure> failures;
};

CorpusStats corpus_stats(std::span<const CorpusDoc> corpus);

// JSONL lines {"id", "sources": [str...], "reference": str}.
std::vector<CorpusDoc> load_corpus(const std::filesystem::path& path);

// Header: dataset,n_docs,a_src,a_sum,inter_sim,compr,abstr
std::string stats_csv(const CorpusStats& stats, std::string_view dataset);

struct ScoredPair {
  std::string id;
  RougeScore r1, r2, rl;
};

// JSONL lines {"id", "candidate": str, "reference": str}.
std::vector<ScoredPair> score_pairs_file(const std::filesystem::path& path);

// Header: id,variant,precision,recall,f1
std::string scores_csv(std::span<const ScoredPair> scores);

}  // namespace repdistill
