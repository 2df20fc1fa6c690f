#include "socripple/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "socripple/rng.hpp"

namespace socripple {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kSocRipple: return "socripple";
    case Variant::kStage1Only: return "stage1_only";
    case Variant::kStage1Sge: return "stage1_sge";
    case Variant::kDropoutNet: return "dropoutnet";
    case Variant::kContentKnn: return "content_knn";
    case Variant::kItemKnn: return "item_knn";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  if (name == "socripple") return Variant::kSocRipple;
  if (name == "stage1_only") return Variant::kStage1Only;
  if (name == "stage1_sge") return Variant::kStage1Sge;
  if (name == "dropoutnet") return Variant::kDropoutNet;
  if (name == "content_knn") return Variant::kContentKnn;
  if (name == "item_knn") return Variant::kItemKnn;
  throw std::invalid_argument("unknown variant: " + name);
}

double recall_at_k(const std::vector<ItemId>& retrieved,
                   const std::unordered_set<ItemId>& relevant, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (relevant.empty()) {
    throw std::invalid_argument("recall undefined on empty relevant set");
  }
  std::size_t hits = 0;
  std::size_t limit = std::min(k, retrieved.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (relevant.count(retrieved[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

EvalContext prepare_eval(const World& world, const TrainConfig& train_config,
                         const DropoutNetConfig& dropout_config,
                         const RippleConfig& ripple_config,
                         IndexMode index_mode) {
  EvalContext ctx;
  ctx.world = &world;
  ctx.ripple = ripple_config;

  auto [train, test] = split(world, world.config.split_time());
  ctx.train_events = std::move(train);
  ctx.test_events = std::move(test);

  std::vector<EngagementEvent> positives;
  positives.reserve(ctx.train_events.size());
  for (const auto& e : ctx.train_events) {
    if (is_positive(e.signal)) positives.push_back(e);
  }
  if (positives.empty()) {
    throw std::runtime_error("no positive training events in world");
  }

  auto trained = train(positives, world.config.num_users,
                       world.config.num_items, train_config);
  ctx.model = std::move(trained.params);
  ctx.index = UserIndex::build(export_user_embeddings(ctx.model), index_mode);
  ctx.co = ItemCoMatrix::build(positives, world.config.num_items);
  for (const auto& e : positives) ctx.warm_items.insert(e.item);

  auto dn = dropoutnet_train(positives, ctx.model.user_table,
                             ctx.model.item_table, world.content,
                             dropout_config);
  ctx.dropout = std::move(dn.params);
  return ctx;
}

namespace {

struct UserEval {
  UserId user;
  Timestamp eval_time;
  std::unordered_set<ItemId> relevant;
};

// Eligible users for a bucket: anchored at their first test positive,
// scored against test positives whose item age at engagement fits the
// bucket. Subsampling is seeded per bucket so every variant sees the
// same cohort.
std::vector<UserEval> eligible_users(const World& world,
                                     const std::vector<EngagementEvent>& test_events,
                                     int bucket_hours, const EvalOptions& opts) {
  std::map<UserId, UserEval> by_user;
  Duration bucket = static_cast<Duration>(bucket_hours) * kHour;
  for (const auto& e : test_events) {
    Duration age = e.at - world.catalog.get(e.item).created_at;
    auto it = by_user.find(e.user);
    if (it == by_user.end()) {
      it = by_user.emplace(e.user, UserEval{e.user, e.at, {}}).first;
    }
    it->second.eval_time = std::min(it->second.eval_time, e.at);
    if (age <= bucket) it->second.relevant.insert(e.item);
  }

  std::vector<UserEval> users;
  for (auto& [user, ue] : by_user) {
    if (!ue.relevant.empty()) users.push_back(std::move(ue));
  }

  if (opts.max_eval_users > 0 && users.size() > opts.max_eval_users) {
    Rng rng(opts.eval_seed * 0x9e3779b9ULL + static_cast<std::uint64_t>(bucket_hours));
    rng.shuffle(users);
    users.resize(opts.max_eval_users);
  }
  std::sort(users.begin(), users.end(), [](const UserEval& a, const UserEval& b) {
    if (a.eval_time != b.eval_time) return a.eval_time < b.eval_time;
    return a.user < b.user;
  });
  return users;
}

}  // namespace

RecallRow evaluate_with(const World& world,
                        const std::vector<EngagementEvent>& test_events,
                        const RetrieverFn& retriever, const std::string& name,
                        int bucket_hours, const EvalOptions& opts) {
  std::vector<UserEval> users =
      eligible_users(world, test_events, bucket_hours, opts);

  RecallRow row;
  row.variant = name;
  row.bucket_hours = bucket_hours;
  row.k = opts.k;
  row.num_users = users.size();
  row.seed = world.config.seed;

  EngagementBuffer buffer(world.config.cold_window, world.config.cold_window);
  ImpressionLog log;
  std::vector<std::vector<ItemId>> history(world.config.num_users);

  std::unordered_set<ItemId> unique_items;
  std::size_t pool_max = 0;
  double recall_sum = 0.0;
  std::size_t hit_total = 0, rel_total = 0;

  std::size_t next_event = 0;
  const auto& events = world.events;
  for (const auto& ue : users) {
    // Strictly-before replay: nothing at or after the anchor leaks in.
    while (next_event < events.size() && events[next_event].at < ue.eval_time) {
      const auto& e = events[next_event];
      log.mark_shown(e.user, e.item, e.at);
      if (is_positive(e.signal)) {
        buffer.record(e, world.catalog.get(e.item).created_at);
        history[e.user].push_back(e.item);
      }
      ++next_event;
    }

    std::vector<ItemId> pool = world.catalog.items_in_age_window(
        ue.eval_time, world.config.cold_window);
    pool_max = std::max(pool_max, pool.size());

    std::vector<ItemId> retrieved =
        retriever(ue.user, ue.eval_time, buffer, log, pool, history[ue.user]);
    recall_sum += recall_at_k(retrieved, ue.relevant, opts.k);
    std::size_t limit = std::min(opts.k, retrieved.size());
    for (std::size_t i = 0; i < limit; ++i) {
      unique_items.insert(retrieved[i]);
      if (ue.relevant.count(retrieved[i])) ++hit_total;
    }
    rel_total += ue.relevant.size();
  }

  if (!users.empty()) {
    row.recall = opts.micro_average
                     ? static_cast<double>(hit_total) / static_cast<double>(rel_total)
                     : recall_sum / static_cast<double>(users.size());
  }
  row.unique_items = unique_items.size();
  row.pool_size = pool_max;
  return row;
}

namespace {

RecallRow evaluate_variant(const EvalContext& ctx, Variant variant,
                           int bucket_hours, const EvalOptions& opts,
                           RippleConfig rcfg) {
  const World& world = *ctx.world;
  rcfg.output_size = opts.k;

  RetrieverFn fn;
  switch (variant) {
    case Variant::kSocRipple:
      fn = [&, rcfg](UserId user, Timestamp now, const EngagementBuffer& buffer,
                     const ImpressionLog& log, const std::vector<ItemId>&,
                     const std::vector<ItemId>&) {
        return retrieve(user, now, world.graph, ctx.index, buffer, log,
                        world.catalog, rcfg);
      };
      break;
    case Variant::kStage1Only:
      fn = [&](UserId user, Timestamp now, const EngagementBuffer&,
               const ImpressionLog& log, const std::vector<ItemId>&,
               const std::vector<ItemId>&) {
        return stage1_only_retrieve(user, world.catalog, world.graph, log, now,
                                    world.config.cold_window, opts.k);
      };
      break;
    case Variant::kStage1Sge:
      fn = [&](UserId user, Timestamp now, const EngagementBuffer& buffer,
               const ImpressionLog& log, const std::vector<ItemId>&,
               const std::vector<ItemId>&) {
        auto out = stage1_only_retrieve(user, world.catalog, world.graph, log,
                                        now, world.config.cold_window, opts.k);
        std::unordered_set<ItemId> taken(out.begin(), out.end());
        for (ItemId item : sge_retrieve(user, world.graph, buffer, log,
                                        world.catalog, now, ctx.sge_hops,
                                        opts.k)) {
          if (out.size() >= opts.k) break;
          if (taken.insert(item).second) out.push_back(item);
        }
        return out;
      };
      break;
    case Variant::kDropoutNet:
      fn = [&](UserId user, Timestamp, const EngagementBuffer&,
               const ImpressionLog& log, const std::vector<ItemId>& pool,
               const std::vector<ItemId>&) {
        return dropoutnet_retrieve(ctx.model.user_table.row(user), ctx.dropout,
                                   world.content, ctx.warm_items, pool, log,
                                   user, opts.k);
      };
      break;
    case Variant::kContentKnn:
      fn = [&](UserId user, Timestamp, const EngagementBuffer&,
               const ImpressionLog& log, const std::vector<ItemId>& pool,
               const std::vector<ItemId>& history) {
        auto profile = user_content_profile(history, world.content);
        if (!profile) return std::vector<ItemId>{};
        return content_knn_retrieve(*profile, world.content, pool, history,
                                    log, user, opts.k);
      };
      break;
    case Variant::kItemKnn:
      fn = [&](UserId user, Timestamp, const EngagementBuffer&,
               const ImpressionLog& log, const std::vector<ItemId>& pool,
               const std::vector<ItemId>& history) {
        return item_knn_retrieve(history, ctx.co, pool, log, user, opts.k);
      };
      break;
  }
  return evaluate_with(world, ctx.test_events, fn, to_string(variant),
                       bucket_hours, opts);
}

}  // namespace

RecallRow evaluate(const EvalContext& ctx, Variant variant, int bucket_hours,
                   const EvalOptions& opts) {
  return evaluate_variant(ctx, variant, bucket_hours, opts, ctx.ripple);
}

std::vector<RecallRow> run_table1(const EvalContext& ctx,
                                  const EvalOptions& opts) {
  std::vector<RecallRow> rows;
  for (Variant v : {Variant::kSocRipple, Variant::kDropoutNet,
                    Variant::kContentKnn, Variant::kItemKnn}) {
    for (int bucket : opts.bucket_hours) {
      rows.push_back(evaluate(ctx, v, bucket, opts));
    }
  }
  return rows;
}

std::vector<RecallRow> run_table2(const EvalContext& ctx,
                                  const EvalOptions& opts) {
  std::vector<RecallRow> rows;
  for (Variant v : {Variant::kStage1Only, Variant::kStage1Sge,
                    Variant::kSocRipple}) {
    rows.push_back(evaluate(ctx, v, 24, opts));
  }
  return rows;
}

std::vector<SweepCell> run_sweep(const EvalContext& ctx,
                                 const std::vector<std::size_t>& k_values,
                                 const std::vector<std::size_t>& m_values,
                                 const EvalOptions& opts) {
  std::vector<SweepCell> cells;
  for (std::size_t k_n : k_values) {
    for (std::size_t m : m_values) {
      RippleConfig rcfg = ctx.ripple;
      rcfg.k_neighbors = k_n;
      rcfg.max_items_per_neighbor = m;
      RecallRow row = evaluate_variant(ctx, Variant::kSocRipple, 24, opts, rcfg);
      cells.push_back({k_n, m, row.recall, row.seed});
    }
  }
  return cells;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void write_recall_csv(const std::string& path,
                      const std::vector<RecallRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "variant,bucket_hours,recall_at_k,k,num_users,seed\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << r.bucket_hours << ',' << format_double(r.recall)
        << ',' << r.k << ',' << r.num_users << ',' << r.seed << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepCell>& cells) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sweep: " + path);
  out << "K,M,recall_at_k,seed\n";
  for (const auto& c : cells) {
    out << c.k_neighbors << ',' << c.m_depth << ',' << format_double(c.recall)
        << ',' << c.seed << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_coverage_csv(const std::string& path,
                        const std::vector<RecallRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write coverage: " + path);
  out << "variant,bucket_hours,unique_items,pool_size,share,seed\n";
  for (const auto& r : rows) {
    double share = r.pool_size > 0 ? static_cast<double>(r.unique_items) /
                                         static_cast<double>(r.pool_size)
                                   : 0.0;
    out << r.variant << ',' << r.bucket_hours << ',' << r.unique_items << ','
        << r.pool_size << ',' << format_double(share) << ',' << r.seed << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string render_sweep_heatmap(const std::vector<SweepCell>& cells) {
  std::vector<std::size_t> ks, ms;
  for (const auto& c : cells) {
    ks.push_back(c.k_neighbors);
    ms.push_back(c.m_depth);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  std::map<std::pair<std::size_t, std::size_t>, double> grid;
  for (const auto& c : cells) grid[{c.k_neighbors, c.m_depth}] = c.recall;

  std::ostringstream os;
  os << "recall@k by K (rows) x M (cols)\n      ";
  for (std::size_t m : ms) os << std::setw(7) << ("M=" + std::to_string(m));
  os << '\n';
  for (std::size_t k : ks) {
    os << "K=" << std::setw(4) << k;
    for (std::size_t m : ms) {
      auto it = grid.find({k, m});
      if (it == grid.end()) {
        os << std::setw(7) << "-";
      } else {
        os << std::setw(7) << std::fixed << std::setprecision(3) << it->second;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace socripple
