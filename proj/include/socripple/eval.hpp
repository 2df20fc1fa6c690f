#pragma once

#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "socripple/ann_index.hpp"
#include "socripple/baselines.hpp"
#include "socripple/ripple.hpp"
#include "socripple/simgen.hpp"
#include "socripple/two_tower.hpp"

namespace socripple {

enum class Variant {
  kSocRipple,
  kStage1Only,
  kStage1Sge,
  kDropoutNet,
  kContentKnn,
  kItemKnn,
};

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct EvalOptions {
  std::size_t k = 200;
  std::vector<int> bucket_hours = {6, 12, 24};
  std::size_t max_eval_users = 400;  // deterministic per-bucket subsample
  std::uint64_t eval_seed = 1;
  bool micro_average = false;  // default: macro-average over users
};

struct RecallRow {
  std::string variant;
  int bucket_hours = 0;
  double recall = 0.0;
  std::size_t k = 0;
  std::size_t num_users = 0;
  std::uint64_t seed = 0;
  // Informational extras (not part of the pinned CSV columns).
  std::size_t unique_items = 0;
  std::size_t pool_size = 0;
};

struct SweepCell {
  std::size_t k_neighbors = 0;
  std::size_t m_depth = 0;
  double recall = 0.0;
  std::uint64_t seed = 0;
};

// |top-k(retrieved) ∩ relevant| / |relevant|. Callers skip users with
// empty relevant sets.
double recall_at_k(const std::vector<ItemId>& retrieved,
                   const std::unordered_set<ItemId>& relevant, std::size_t k);

// Everything trained once per world; retrievers then share it.
struct EvalContext {
  const World* world = nullptr;
  std::vector<EngagementEvent> train_events;
  std::vector<EngagementEvent> test_events;
  ModelParams model;
  UserIndex index;
  ItemCoMatrix co;
  DropoutNetParams dropout;
  std::unordered_set<ItemId> warm_items;  // items with train-period positives
  RippleConfig ripple;
  std::size_t sge_hops = 1;
};

EvalContext prepare_eval(const World& world, const TrainConfig& train_config,
                         const DropoutNetConfig& dropout_config,
                         const RippleConfig& ripple_config,
                         IndexMode index_mode = IndexMode::kExact);

// A retriever sees only state replayed to strictly before the user's
// evaluation time: the live buffer/log, the cold candidate pool, and the
// user's own positive history.
using RetrieverFn = std::function<std::vector<ItemId>(
    UserId user, Timestamp now, const EngagementBuffer& buffer,
    const ImpressionLog& log, const std::vector<ItemId>& candidates,
    const std::vector<ItemId>& history)>;

// Protocol core: anchor each eligible user at their first test positive,
// replay the world to that instant, retrieve, score against the user's
// bucketed test positives.
RecallRow evaluate_with(const World& world,
                        const std::vector<EngagementEvent>& test_events,
                        const RetrieverFn& retriever, const std::string& name,
                        int bucket_hours, const EvalOptions& opts);

RecallRow evaluate(const EvalContext& ctx, Variant variant, int bucket_hours,
                   const EvalOptions& opts);

// Table 1: socripple vs the three baselines across the age buckets.
std::vector<RecallRow> run_table1(const EvalContext& ctx,
                                  const EvalOptions& opts);

// Table 2: neighbor-expansion ablation on the 24h bucket.
std::vector<RecallRow> run_table2(const EvalContext& ctx,
                                  const EvalOptions& opts);

// Figure 2: socripple recall over the (K, M) grid.
std::vector<SweepCell> run_sweep(const EvalContext& ctx,
                                 const std::vector<std::size_t>& k_values,
                                 const std::vector<std::size_t>& m_values,
                                 const EvalOptions& opts);

// CSV: variant,bucket_hours,recall_at_k,k,num_users,seed
void write_recall_csv(const std::string& path,
                      const std::vector<RecallRow>& rows);
// CSV: K,M,recall_at_k,seed
void write_sweep_csv(const std::string& path,
                     const std::vector<SweepCell>& cells);
// CSV: variant,bucket_hours,unique_items,pool_size,share,seed
void write_coverage_csv(const std::string& path,
                        const std::vector<RecallRow>& rows);

std::string render_sweep_heatmap(const std::vector<SweepCell>& cells);

}  // namespace socripple
