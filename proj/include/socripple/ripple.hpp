#pragma once

#include <cstdint>
#include <vector>

#include "socripple/ann_index.hpp"
#include "socripple/engagement.hpp"
#include "socripple/social_graph.hpp"
#include "socripple/types.hpp"

namespace socripple {

struct ScoreWeights {
  double support = 1.0;
  double similarity = 1.0;
  double freshness = 0.5;
  double tau_hours = 12.0;  // freshness decay time constant

  void validate() const;
};

struct RippleConfig {
  std::size_t k_neighbors = 70;           // KNN breadth
  std::size_t max_items_per_neighbor = 20;  // expansion depth per neighbor
  std::size_t output_size = 200;
  ScoreWeights weights;
  bool use_max_similarity = false;  // mean over supporters by default

  void validate() const;
};

struct CandidateFeatures {
  ItemId item = 0;
  std::size_t support = 0;        // distinct engaged neighbors
  double mean_similarity = 0.0;   // over supporting neighbors
  double freshness = 0.0;         // exp(-age_hours / tau)
};

struct ScoredCandidate {
  ItemId item = 0;
  double score = 0.0;

  bool operator==(const ScoredCandidate&) const = default;
};

enum class Source : std::uint8_t { kStage1, kStage2 };

struct RetrievedItem {
  ItemId item = 0;
  double score = 0.0;
  Source source = Source::kStage2;
};

// Stage 1: followers of the item's creator, ascending id.
std::vector<UserId> stage1_targets(const ItemMeta& item, const SocialGraph& graph);

// Weighted linear score of the three candidate features:
//   w_support * (support / K) + w_similarity * mean_sim + w_freshness * freshness
double score_candidate(const CandidateFeatures& features, std::size_t k_neighbors,
                       const ScoreWeights& weights);

// Stage 2: KNN neighbors -> recent cold-item engagements (up to M newest
// per neighbor) -> featurize -> drop shown/self-authored -> score ->
// sort descending, ties by ascending item id, truncate to output_size.
std::vector<ScoredCandidate> stage2_candidates(
    UserId user, Timestamp now, const UserIndex& index,
    const EngagementBuffer& buffer, const ImpressionLog& log,
    const ItemCatalog& catalog, const RippleConfig& config);

// Merged retrieval: Stage-1 items (creator followed by the user, within
// the buffer's cold-age window, unseen; newest first) ahead of Stage-2
// candidates; deduplicated; at most output_size entries.
std::vector<RetrievedItem> retrieve_detailed(
    UserId user, Timestamp now, const SocialGraph& graph,
    const UserIndex& index, const EngagementBuffer& buffer,
    const ImpressionLog& log, const ItemCatalog& catalog,
    const RippleConfig& config);

std::vector<ItemId> retrieve(UserId user, Timestamp now,
                             const SocialGraph& graph, const UserIndex& index,
                             const EngagementBuffer& buffer,
                             const ImpressionLog& log,
                             const ItemCatalog& catalog,
                             const RippleConfig& config);

}  // namespace socripple
