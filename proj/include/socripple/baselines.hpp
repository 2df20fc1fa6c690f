#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "socripple/engagement.hpp"
#include "socripple/matrix.hpp"
#include "socripple/social_graph.hpp"
#include "socripple/two_tower.hpp"
#include "socripple/types.hpp"

namespace socripple {

// Item-item cosine over user-engagement vectors. Binary counts by
// default (a user either engaged an item or not).
class ItemCoMatrix {
 public:
  static ItemCoMatrix build(const std::vector<EngagementEvent>& positives,
                            std::size_t num_items, bool binary = true);

  double cosine(ItemId a, ItemId b) const;
  std::size_t num_items() const { return norms_sq_.size(); }
  bool has_signal(ItemId item) const {
    return item < norms_sq_.size() && norms_sq_[item] > 0.0;
  }

 private:
  std::vector<std::unordered_map<ItemId, double>> co_;  // upper half, a < b
  std::vector<double> norms_sq_;
};

// Sum of co-cosines against the user's history; empty history retrieves
// nothing. `candidates` is the cold pool supplied by the caller.
std::vector<ItemId> item_knn_retrieve(
    const std::vector<ItemId>& history, const ItemCoMatrix& co,
    const std::vector<ItemId>& candidates, const ImpressionLog& log,
    UserId user, std::size_t n);

// Mean of engaged items' content vectors; empty when no history.
std::optional<std::vector<double>> user_content_profile(
    const std::vector<ItemId>& history, const Matrix& content);

std::vector<ItemId> content_knn_retrieve(
    const std::vector<double>& profile, const Matrix& content,
    const std::vector<ItemId>& candidates,
    const std::vector<ItemId>& history, const ImpressionLog& log,
    UserId user, std::size_t n);

// --- DropoutNet ------------------------------------------------------

struct DropoutNetConfig {
  double cf_dropout_p = 0.5;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
};

// Fusion MLP: concat(cf, content) -> hidden (2d, relu) -> d.
// The CF item table is trained jointly; user embeddings stay fixed.
struct DropoutNetParams {
  Matrix cf_items;  // trainable copy of the CF item table
  Matrix w1;        // hidden x (d + d_c)
  std::vector<double> b1;
  Matrix w2;        // d x hidden
  std::vector<double> b2;

  std::size_t cf_dim() const { return cf_items.cols(); }
  std::size_t content_dim() const { return w1.cols() - cf_items.cols(); }
  std::size_t out_dim() const { return w2.rows(); }

  // Fusion that reproduces the CF vector exactly (relu(x) - relu(-x))
  // and ignores content; step-0 scores then equal the CF model's.
  static DropoutNetParams cf_projection(const Matrix& cf_items,
                                        std::size_t content_dim);
};

std::vector<double> dropoutnet_fuse(const DropoutNetParams& params, ItemId item,
                                    const Matrix& content, bool drop_cf);

double dropoutnet_batch_loss(const DropoutNetParams& params,
                             const Matrix& user_table, const Matrix& content,
                             const TrainBatch& batch,
                             const std::vector<bool>& drop_mask);

struct DropoutNetTrainResult {
  DropoutNetParams params;
  std::vector<double> epoch_losses;
};

DropoutNetTrainResult dropoutnet_train(
    const std::vector<EngagementEvent>& events, const Matrix& user_table,
    const Matrix& cf_items_init, const Matrix& content,
    const DropoutNetConfig& config);

// Affinity ranking with fused item vectors; items outside `warm_items`
// are scored with the CF part zeroed.
std::vector<ItemId> dropoutnet_retrieve(
    std::span<const double> user_emb, const DropoutNetParams& params,
    const Matrix& content, const std::unordered_set<ItemId>& warm_items,
    const std::vector<ItemId>& candidates, const ImpressionLog& log,
    UserId user, std::size_t n);

// --- Social ablations -------------------------------------------------

// Social-graph expansion: follows (and their follows at hops >= 2)
// replace embedding neighbors; rank by support, then freshness, then id.
std::vector<ItemId> sge_retrieve(UserId user, const SocialGraph& graph,
                                 const EngagementBuffer& buffer,
                                 const ImpressionLog& log,
                                 const ItemCatalog& catalog, Timestamp now,
                                 std::size_t hops, std::size_t n);

// Stage 1 alone: fresh unseen items from followed creators, newest first.
std::vector<ItemId> stage1_only_retrieve(UserId user,
                                         const ItemCatalog& catalog,
                                         const SocialGraph& graph,
                                         const ImpressionLog& log,
                                         Timestamp now, Duration max_item_age,
                                         std::size_t n);

}  // namespace socripple
