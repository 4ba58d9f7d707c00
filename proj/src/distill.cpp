#include "repdistill/distill.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <numeric>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "repdistill/error.hpp"
#include "repdistill/rng.hpp"

namespace repdistill {

using json = nlohmann::json;

namespace {

// Largest first, ties by center id byte order.
std::vector<std::size_t> by_size_desc(std::span<const SubCluster> subs) {
  std::vector<std::size_t> order(subs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (subs[a].capacity() != subs[b].capacity()) {
      return subs[a].capacity() > subs[b].capacity();
    }
    return subs[a].center_id < subs[b].center_id;
  });
  return order;
}

}  // namespace

std::string_view to_string(CenterMode mode) {
  return mode == CenterMode::Medoid ? "medoid" : "all";
}

CenterMode parse_center_mode(std::string_view text) {
  if (text == "medoid") return CenterMode::Medoid;
  if (text == "all") return CenterMode::All;
  throw Error(ErrorCode::InvalidArgument,
              "unknown center mode '" + std::string(text) + "'");
}

std::vector<std::string> choose_centers(const VectorSet& set,
                                        const Clustering& clustering) {
  const std::size_t k = clustering.k;
  std::vector<std::size_t> best(k, VectorSet::npos);
  std::vector<double> best_sim(k, -2.0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& id = set.ids()[i];
    const std::size_t c = clustering.cluster_of(id);
    if (c >= k) {
      throw Error(ErrorCode::InvalidArgument,
                  "assignment of '" + id + "' out of range");
    }
    const double sim = cosine_similarity(set.row(i), clustering.centroids[c]);
    if (best[c] == VectorSet::npos || sim > best_sim[c] ||
        (sim == best_sim[c] && id < set.ids()[best[c]])) {
      best[c] = i;
      best_sim[c] = sim;
    }
  }
  std::vector<std::string> centers;
  centers.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (best[c] == VectorSet::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("cluster {} has no members in the set", c));
    }
    centers.push_back(set.ids()[best[c]]);
  }
  return centers;
}

SubCluster build_subcluster(std::string_view center, const VectorSet& set,
                            std::size_t k) {
  NeighborList nl = knn_neighbors(center, set, k);
  return SubCluster{std::move(nl.center_id), std::move(nl.neighbor_ids),
                    std::move(nl.similarities)};
}

std::vector<std::size_t> stride_ranks(std::size_t members, std::size_t slots) {
  std::vector<std::size_t> ranks;
  ranks.reserve(slots);
  for (std::size_t t = 0; t < slots; ++t) {
    std::size_t r = t * members / slots;
    // Forward fill when two strides land on the same rank.
    if (!ranks.empty() && r <= ranks.back()) r = ranks.back() + 1;
    ranks.push_back(r);
  }
  return ranks;
}

std::vector<std::string> uniform_stride_sample(const SubCluster& sub,
                                               std::size_t quota) {
  if (quota > sub.capacity()) {
    throw Error(ErrorCode::QuotaTooLarge,
                fmt::format("quota {} exceeds {} members plus center", quota,
                            sub.member_ids.size()));
  }
  std::vector<std::string> out;
  if (quota == 0) return out;
  out.reserve(quota);
  out.push_back(sub.center_id);
  for (std::size_t r : stride_ranks(sub.member_ids.size(), quota - 1)) {
    out.push_back(sub.member_ids[r]);
  }
  return out;
}

Budget allocate_budget(std::span<const SubCluster> subs, std::size_t total) {
  if (total == 0) {
    throw Error(ErrorCode::InvalidArgument, "budget total must be >= 1");
  }
  Budget budget;
  budget.total = total;
  const std::vector<std::size_t> order = by_size_desc(subs);
  std::vector<std::size_t> quota(subs.size(), 0);
  std::size_t capacity = 0;
  for (const auto& s : subs) capacity += s.capacity();
  std::size_t remaining = std::min(total, capacity);
  budget.feasible = total <= capacity;

  while (remaining > 0) {
    std::vector<std::size_t> open;
    for (std::size_t i : order) {
      if (quota[i] < subs[i].capacity()) open.push_back(i);
    }
    const std::size_t base = remaining / open.size();
    std::size_t extra = remaining % open.size();
    for (std::size_t i : open) {
      std::size_t want = base;
      if (extra > 0) {
        ++want;
        --extra;
      }
      const std::size_t take = std::min(want, subs[i].capacity() - quota[i]);
      quota[i] += take;
      remaining -= take;
    }
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    budget.per_center_quota[subs[i].center_id] += quota[i];
  }
  return budget;
}

SelectionManifest distill(const VectorSet& set, const Clustering& clustering,
                          const DistillOptions& options) {
  if (options.total == 0) {
    throw Error(ErrorCode::InvalidArgument, "budget total must be >= 1");
  }
  if (set.size() < 2) {
    throw Error(ErrorCode::TooFewPoints, "distillation needs >= 2 records");
  }
  if (options.k_neighbors == 0) {
    throw Error(ErrorCode::InvalidArgument, "k_neighbors must be >= 1");
  }
  const std::vector<std::string> centers =
      options.centers == CenterMode::Medoid ? choose_centers(set, clustering)
                                            : set.ids();
  const std::size_t k = std::min(options.k_neighbors, set.size() - 1);

  std::vector<SubCluster> subs;
  subs.reserve(centers.size());
  std::unordered_set<std::string_view> reachable;
  for (const auto& c : centers) {
    subs.push_back(build_subcluster(c, set, k));
  }
  for (const auto& s : subs) {
    reachable.insert(s.center_id);
    for (const auto& m : s.member_ids) reachable.insert(m);
  }

  // Quotas never exceed the number of distinct ids the sub-clusters reach.
  Budget budget = allocate_budget(subs, std::min(options.total, reachable.size()));
  budget.total = options.total;
  budget.seed = options.seed;
  budget.feasible = options.total <= set.size();

  std::vector<std::size_t> fold(subs.size());
  std::iota(fold.begin(), fold.end(), 0);
  std::sort(fold.begin(), fold.end(), [&](std::size_t a, std::size_t b) {
    return subs[a].center_id < subs[b].center_id;
  });
  std::set<std::string> selected;
  for (std::size_t i : fold) {
    const auto quota = budget.per_center_quota.at(subs[i].center_id);
    for (auto& id : uniform_stride_sample(subs[i], quota)) {
      selected.insert(std::move(id));
    }
  }

  // Overlapping sub-clusters can select the same id twice; refill from the
  // next-ranked unselected members, largest sub-cluster first, then along the
  // largest center's full similarity ranking.
  const std::size_t target = std::min(options.total, set.size());
  std::size_t refilled = 0;
  auto take = [&](const std::string& id) {
    if (selected.size() < target && selected.insert(id).second) ++refilled;
  };
  if (selected.size() < target) {
    const auto order = by_size_desc(subs);
    for (std::size_t i : order) {
      take(subs[i].center_id);
      for (const auto& m : subs[i].member_ids) take(m);
      if (selected.size() >= target) break;
    }
    if (selected.size() < target && !order.empty()) {
      const auto ranking = rank_by_similarity(subs[order.front()].center_id, set);
      for (const auto& id : ranking.neighbor_ids) take(id);
    }
  }

  SelectionManifest m;
  m.method = "distill";
  m.dataset_tag = options.dataset_tag;
  m.space = set.space();
  m.k_neighbors = k;
  m.n_centers = centers.size();
  m.centers = centers;
  std::sort(m.centers.begin(), m.centers.end());
  m.budget = std::move(budget);
  m.selected_ids.assign(selected.begin(), selected.end());
  m.refilled = refilled;
  m.created_at = options.created_at;
  m.parameters = json{{"method", "distill"},
                      {"centers", std::string(to_string(options.centers))},
                      {"k_neighbors_requested", options.k_neighbors},
                      {"k_neighbors", k},
                      {"total", options.total},
                      {"seed", options.seed},
                      {"n_records", set.size()},
                      {"model_tag", set.model_tag()},
                      {"epoch", set.epoch()},
                      {"clustering_k", clustering.k},
                      {"clustering_metric", std::string(to_string(clustering.metric))},
                      {"clustering_seed", clustering.seed}};
  return m;
}

SelectionManifest random_baseline_sample(const VectorSet& set,
                                         std::size_t total, std::uint64_t seed,
                                         std::string dataset_tag,
                                         std::string created_at) {
  if (total > set.size()) {
    throw Error(ErrorCode::TotalTooLarge,
                fmt::format("total {} exceeds {} records", total, set.size()));
  }
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `total` slots are a uniform sample.
  for (std::size_t i = 0; i < total; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  SelectionManifest m;
  m.method = "random";
  m.dataset_tag = std::move(dataset_tag);
  m.space = set.space();
  m.budget.total = total;
  m.budget.seed = seed;
  m.budget.feasible = true;
  for (std::size_t i = 0; i < total; ++i) m.selected_ids.push_back(set.ids()[idx[i]]);
  std::sort(m.selected_ids.begin(), m.selected_ids.end());
  m.created_at = std::move(created_at);
  m.parameters = json{{"method", "random"},
                      {"total", total},
                      {"seed", seed},
                      {"n_records", set.size()},
                      {"model_tag", set.model_tag()},
                      {"epoch", set.epoch()}};
  return m;
}

json to_json(const SelectionManifest& m) {
  json quotas = json::object();
  for (const auto& [id, q] : m.budget.per_center_quota) quotas[id] = q;
  return json{{"method", m.method},
              {"dataset_tag", m.dataset_tag},
              {"space", std::string(to_string(m.space))},
              {"k_neighbors", m.k_neighbors},
              {"n_centers", m.n_centers},
              {"centers", m.centers},
              {"budget",
               {{"total", m.budget.total},
                {"per_center_quota", std::move(quotas)},
                {"seed", m.budget.seed},
                {"feasible", m.budget.feasible}}},
              {"selected_count", m.selected_ids.size()},
              {"refilled", m.refilled},
              {"selected_ids", m.selected_ids},
              {"parameters", m.parameters},
              {"created_at", m.created_at}};
}

std::string utc_timestamp_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace repdistill
