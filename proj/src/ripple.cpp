#include "socripple/ripple.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace socripple {

void ScoreWeights::validate() const {
  if (support < 0 || similarity < 0 || freshness < 0) {
    throw std::invalid_argument("score weights must be non-negative");
  }
  if (support == 0 && similarity == 0 && freshness == 0) {
    throw std::invalid_argument("at least one score weight must be positive");
  }
  if (tau_hours <= 0) throw std::invalid_argument("tau must be positive");
}

void RippleConfig::validate() const {
  if (k_neighbors == 0 || max_items_per_neighbor == 0 || output_size == 0) {
    throw std::invalid_argument("ripple counts must be >= 1");
  }
  weights.validate();
}

std::vector<UserId> stage1_targets(const ItemMeta& item,
                                   const SocialGraph& graph) {
  return graph.followers(item.creator);  // already ascending
}

double score_candidate(const CandidateFeatures& features,
                       std::size_t k_neighbors, const ScoreWeights& weights) {
  if (features.support > k_neighbors) {
    throw std::invalid_argument("support exceeds neighbor count");
  }
  double support_frac = static_cast<double>(features.support) /
                        static_cast<double>(k_neighbors);
  return weights.support * support_frac +
         weights.similarity * features.mean_similarity +
         weights.freshness * features.freshness;
}

namespace {

double freshness_of(Timestamp now, Timestamp created_at, double tau_hours) {
  double age_hours = static_cast<double>(now - created_at) / 3600.0;
  return std::exp(-age_hours / tau_hours);
}

struct Accum {
  std::size_t support = 0;
  double sim_sum = 0.0;
  double sim_max = -2.0;
};

}  // namespace

std::vector<ScoredCandidate> stage2_candidates(
    UserId user, Timestamp now, const UserIndex& index,
    const EngagementBuffer& buffer, const ImpressionLog& log,
    const ItemCatalog& catalog, const RippleConfig& config) {
  config.validate();
  NeighborList neighbors = index.knn(user, config.k_neighbors);

  // Union of the neighbors' most recent cold-item engagements.
  std::map<ItemId, Accum> by_item;
  for (const auto& nb : neighbors) {
    auto recent = buffer.recent_items(nb.user, now);
    std::size_t take = std::min(recent.size(), config.max_items_per_neighbor);
    // recent_items is newest-first; a neighbor supports an item once no
    // matter how many of their entries mention it.
    std::vector<ItemId> seen_here;
    for (std::size_t i = 0; i < take; ++i) {
      ItemId item = recent[i].first;
      if (std::find(seen_here.begin(), seen_here.end(), item) !=
          seen_here.end()) {
        continue;
      }
      seen_here.push_back(item);
      Accum& acc = by_item[item];
      acc.support += 1;
      acc.sim_sum += nb.similarity;
      acc.sim_max = std::max(acc.sim_max, nb.similarity);
    }
  }

  std::vector<ScoredCandidate> out;
  out.reserve(by_item.size());
  for (const auto& [item, acc] : by_item) {
    const ItemMeta& meta = catalog.get(item);
    if (meta.creator == user) continue;
    if (log.was_shown(user, item)) continue;
    CandidateFeatures f;
    f.item = item;
    f.support = acc.support;
    f.mean_similarity = config.use_max_similarity
                            ? acc.sim_max
                            : acc.sim_sum / static_cast<double>(acc.support);
    f.freshness = freshness_of(now, meta.created_at, config.weights.tau_hours);
    out.push_back({item, score_candidate(f, config.k_neighbors, config.weights)});
  }

  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  });
  if (out.size() > config.output_size) out.resize(config.output_size);
  return out;
}

std::vector<RetrievedItem> retrieve_detailed(
    UserId user, Timestamp now, const SocialGraph& graph,
    const UserIndex& index, const EngagementBuffer& buffer,
    const ImpressionLog& log, const ItemCatalog& catalog,
    const RippleConfig& config) {
  config.validate();

  // Stage 1: fresh unseen items from followed creators, newest first.
  std::vector<ItemId> stage1;
  for (UserId creator : graph.following(user)) {
    for (ItemId item : catalog.items_by_creator(creator)) {
      Duration age = now - catalog.get(item).created_at;
      if (age < 0 || age > buffer.max_item_age()) continue;
      if (log.was_shown(user, item)) continue;
      stage1.push_back(item);
    }
  }
  std::sort(stage1.begin(), stage1.end(), [&](ItemId a, ItemId b) {
    Timestamp ca = catalog.get(a).created_at;
    Timestamp cb = catalog.get(b).created_at;
    if (ca != cb) return ca > cb;
    return a < b;
  });

  std::vector<RetrievedItem> out;
  std::vector<char> taken(catalog.size(), 0);
  for (ItemId item : stage1) {
    if (out.size() >= config.output_size) break;
    if (taken[item]) continue;
    taken[item] = 1;
    double fresh = freshness_of(now, catalog.get(item).created_at,
                                config.weights.tau_hours);
    out.push_back({item, fresh, Source::kStage1});
  }

  for (const auto& cand : stage2_candidates(user, now, index, buffer, log,
                                            catalog, config)) {
    if (out.size() >= config.output_size) break;
    if (taken[cand.item]) continue;
    taken[cand.item] = 1;
    out.push_back({cand.item, cand.score, Source::kStage2});
  }
  return out;
}

std::vector<ItemId> retrieve(UserId user, Timestamp now,
                             const SocialGraph& graph, const UserIndex& index,
                             const EngagementBuffer& buffer,
                             const ImpressionLog& log,
                             const ItemCatalog& catalog,
                             const RippleConfig& config) {
  auto detailed =
      retrieve_detailed(user, now, graph, index, buffer, log, catalog, config);
  std::vector<ItemId> out;
  out.reserve(detailed.size());
  for (const auto& r : detailed) out.push_back(r.item);
  return out;
}

}  // namespace socripple
