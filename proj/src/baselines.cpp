#include "socripple/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "socripple/rng.hpp"

namespace socripple {

namespace {

// Descending score, ascending id on ties.
void rank_and_truncate(std::vector<std::pair<ItemId, double>>& scored,
                       std::size_t n, std::vector<ItemId>& out) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > n) scored.resize(n);
  out.reserve(scored.size());
  for (const auto& [item, score] : scored) out.push_back(item);
}

}  // namespace

ItemCoMatrix ItemCoMatrix::build(const std::vector<EngagementEvent>& positives,
                                 std::size_t num_items, bool binary) {
  ItemCoMatrix m;
  m.co_.resize(num_items);
  m.norms_sq_.assign(num_items, 0.0);

  std::unordered_map<UserId, std::unordered_map<ItemId, double>> by_user;
  for (const auto& e : positives) {
    if (!is_positive(e.signal)) {
      throw std::invalid_argument("co-matrix expects positive events only");
    }
    if (e.item >= num_items) throw std::out_of_range("item outside catalog");
    double& x = by_user[e.user][e.item];
    x = binary ? 1.0 : x + 1.0;
  }

  for (const auto& [user, items] : by_user) {
    for (const auto& [item, weight] : items) {
      m.norms_sq_[item] += weight * weight;
    }
    for (auto a = items.begin(); a != items.end(); ++a) {
      auto b = a;
      for (++b; b != items.end(); ++b) {
        ItemId lo = std::min(a->first, b->first);
        ItemId hi = std::max(a->first, b->first);
        m.co_[lo][hi] += a->second * b->second;
      }
    }
  }
  return m;
}

double ItemCoMatrix::cosine(ItemId a, ItemId b) const {
  if (a >= norms_sq_.size() || b >= norms_sq_.size()) {
    throw std::out_of_range("item outside co-matrix");
  }
  if (a == b) return 0.0;  // self-excluded
  ItemId lo = std::min(a, b);
  ItemId hi = std::max(a, b);
  auto it = co_[lo].find(hi);
  if (it == co_[lo].end()) return 0.0;
  double denom = std::sqrt(norms_sq_[a] * norms_sq_[b]);
  return denom > 0.0 ? it->second / denom : 0.0;
}

std::vector<ItemId> item_knn_retrieve(
    const std::vector<ItemId>& history, const ItemCoMatrix& co,
    const std::vector<ItemId>& candidates, const ImpressionLog& log,
    UserId user, std::size_t n) {
  std::vector<ItemId> out;
  if (history.empty()) return out;  // pure CF has nothing to go on

  std::unordered_set<ItemId> engaged(history.begin(), history.end());
  std::vector<std::pair<ItemId, double>> scored;
  for (ItemId c : candidates) {
    if (engaged.count(c) || log.was_shown(user, c)) continue;
    double s = 0.0;
    for (ItemId h : history) s += co.cosine(c, h);
    scored.emplace_back(c, s);
  }
  rank_and_truncate(scored, n, out);
  return out;
}

std::optional<std::vector<double>> user_content_profile(
    const std::vector<ItemId>& history, const Matrix& content) {
  if (history.empty()) return std::nullopt;
  std::vector<double> profile(content.cols(), 0.0);
  for (ItemId item : history) {
    auto row = content.row(item);
    for (std::size_t k = 0; k < profile.size(); ++k) profile[k] += row[k];
  }
  for (double& x : profile) x /= static_cast<double>(history.size());
  return profile;
}

std::vector<ItemId> content_knn_retrieve(
    const std::vector<double>& profile, const Matrix& content,
    const std::vector<ItemId>& candidates, const std::vector<ItemId>& history,
    const ImpressionLog& log, UserId user, std::size_t n) {
  std::unordered_set<ItemId> engaged(history.begin(), history.end());
  std::vector<std::pair<ItemId, double>> scored;
  for (ItemId c : candidates) {
    if (engaged.count(c) || log.was_shown(user, c)) continue;
    scored.emplace_back(c, cosine(profile, content.row(c)));
  }
  std::vector<ItemId> out;
  rank_and_truncate(scored, n, out);
  return out;
}

// --- DropoutNet ------------------------------------------------------

DropoutNetParams DropoutNetParams::cf_projection(const Matrix& cf_items,
                                                 std::size_t content_dim) {
  std::size_t d = cf_items.cols();
  DropoutNetParams p;
  p.cf_items = cf_items;
  p.w1 = Matrix(2 * d, d + content_dim);
  p.b1.assign(2 * d, 0.0);
  p.w2 = Matrix(d, 2 * d);
  p.b2.assign(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    p.w1.at(k, k) = 1.0;       // relu(x)
    p.w1.at(d + k, k) = -1.0;  // relu(-x)
    p.w2.at(k, k) = 1.0;
    p.w2.at(k, d + k) = -1.0;  // x = relu(x) - relu(-x)
  }
  return p;
}

namespace {

struct FuseTrace {
  std::vector<double> input;   // concat(masked cf, content)
  std::vector<double> hidden;  // post-relu
  std::vector<double> out;
};

FuseTrace fuse_forward(const DropoutNetParams& p, ItemId item,
                       const Matrix& content, bool drop_cf) {
  std::size_t d = p.cf_dim();
  std::size_t dc = content.cols();
  if (item >= content.rows() || item >= p.cf_items.rows()) {
    throw std::out_of_range("item missing content or CF features: " +
                            std::to_string(item));
  }
  FuseTrace t;
  t.input.resize(d + dc);
  if (!drop_cf) {
    auto cf = p.cf_items.row(item);
    std::copy(cf.begin(), cf.end(), t.input.begin());
  }
  auto ct = content.row(item);
  std::copy(ct.begin(), ct.end(), t.input.begin() + d);

  std::size_t hidden = p.w1.rows();
  t.hidden.resize(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    double z = p.b1[h] + dot(p.w1.row(h), t.input);
    t.hidden[h] = z > 0.0 ? z : 0.0;
  }
  std::size_t out_d = p.w2.rows();
  t.out.resize(out_d);
  for (std::size_t k = 0; k < out_d; ++k) {
    t.out[k] = p.b2[k] + dot(p.w2.row(k), t.hidden);
  }
  return t;
}

std::vector<double> softmax_of(const std::vector<double>& scores) {
  double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - mx);
    denom += p[i];
  }
  for (double& x : p) x /= denom;
  return p;
}

}  // namespace

std::vector<double> dropoutnet_fuse(const DropoutNetParams& params, ItemId item,
                                    const Matrix& content, bool drop_cf) {
  return fuse_forward(params, item, content, drop_cf).out;
}

double dropoutnet_batch_loss(const DropoutNetParams& params,
                             const Matrix& user_table, const Matrix& content,
                             const TrainBatch& batch,
                             const std::vector<bool>& drop_mask) {
  std::size_t b = batch.size();
  if (drop_mask.size() != b) throw std::invalid_argument("mask/batch mismatch");
  std::vector<std::vector<double>> fused(b);
  for (std::size_t c = 0; c < b; ++c) {
    fused[c] = dropoutnet_fuse(params, batch.pairs[c].second, content,
                               drop_mask[c]);
  }
  double loss = 0.0;
  std::vector<double> row(b);
  for (std::size_t r = 0; r < b; ++r) {
    auto u = user_table.row(batch.pairs[r].first);
    for (std::size_t c = 0; c < b; ++c) row[c] = dot(u, fused[c]);
    loss -= std::log(softmax_of(row)[r]);
  }
  return loss;
}

DropoutNetTrainResult dropoutnet_train(
    const std::vector<EngagementEvent>& events, const Matrix& user_table,
    const Matrix& cf_items_init, const Matrix& content,
    const DropoutNetConfig& config) {
  if (events.empty()) throw std::invalid_argument("no training events");
  if (config.cf_dropout_p < 0.0 || config.cf_dropout_p >= 1.0 + 1e-12) {
    throw std::invalid_argument("cf_dropout_p must be in [0, 1]");
  }
  if (content.rows() < cf_items_init.rows()) {
    throw std::invalid_argument("content features missing for some items");
  }

  std::size_t d = cf_items_init.cols();
  std::size_t dc = content.cols();
  std::size_t hidden = 2 * d;

  Rng root(config.seed);
  Rng init_rng = root.fork(1);
  Rng shuffle_rng = root.fork(2);
  Rng drop_rng = root.fork(3);

  DropoutNetParams p;
  p.cf_items = cf_items_init;
  p.w1 = Matrix(hidden, d + dc);
  p.b1.assign(hidden, 0.0);
  p.w2 = Matrix(d, hidden);
  p.b2.assign(d, 0.0);
  for (double& x : p.w1.data()) {
    x = init_rng.uniform(-config.init_scale, config.init_scale);
  }
  for (double& x : p.w2.data()) {
    x = init_rng.uniform(-config.init_scale, config.init_scale);
  }

  std::vector<std::pair<UserId, ItemId>> pairs;
  pairs.reserve(events.size());
  for (const auto& e : events) {
    if (!is_positive(e.signal)) {
      throw std::invalid_argument("training events must be positive signals");
    }
    pairs.emplace_back(e.user, e.item);
  }

  std::vector<double> epoch_losses;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(pairs);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < pairs.size();
         start += config.batch_size) {
      std::size_t end = std::min(start + config.batch_size, pairs.size());
      std::size_t b = end - start;

      std::vector<bool> mask(b);
      for (std::size_t c = 0; c < b; ++c) {
        mask[c] = drop_rng.next_double() < config.cf_dropout_p;
      }

      std::vector<FuseTrace> traces(b);
      for (std::size_t c = 0; c < b; ++c) {
        traces[c] = fuse_forward(p, pairs[start + c].second, content, mask[c]);
      }

      Matrix scores(b, b);
      for (std::size_t r = 0; r < b; ++r) {
        auto u = user_table.row(pairs[start + r].first);
        for (std::size_t c = 0; c < b; ++c) {
          scores.at(r, c) = dot(u, traces[c].out);
        }
      }

      // dL/ds and the per-column gradient on the fused output.
      std::vector<std::vector<double>> g_out(b, std::vector<double>(d, 0.0));
      for (std::size_t r = 0; r < b; ++r) {
        std::vector<double> row(b);
        for (std::size_t c = 0; c < b; ++c) row[c] = scores.at(r, c);
        auto prob = softmax_of(row);
        loss_sum -= std::log(prob[r]);
        auto u = user_table.row(pairs[start + r].first);
        for (std::size_t c = 0; c < b; ++c) {
          double g = prob[c] - (c == r ? 1.0 : 0.0);
          for (std::size_t k = 0; k < d; ++k) g_out[c][k] += g * u[k];
        }
      }

      Matrix gw1(hidden, d + dc);
      std::vector<double> gb1(hidden, 0.0);
      Matrix gw2(d, hidden);
      std::vector<double> gb2(d, 0.0);
      std::map<ItemId, std::vector<double>> gcf;

      for (std::size_t c = 0; c < b; ++c) {
        const FuseTrace& t = traces[c];
        std::vector<double> dh(hidden, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
          gb2[k] += g_out[c][k];
          auto w2row = gw2.row(k);
          for (std::size_t h = 0; h < hidden; ++h) {
            w2row[h] += g_out[c][k] * t.hidden[h];
            dh[h] += p.w2.at(k, h) * g_out[c][k];
          }
        }
        std::vector<double> dx(d + dc, 0.0);
        for (std::size_t h = 0; h < hidden; ++h) {
          if (t.hidden[h] <= 0.0) continue;  // relu gate
          gb1[h] += dh[h];
          auto w1row = gw1.row(h);
          auto pw1row = p.w1.row(h);
          for (std::size_t j = 0; j < d + dc; ++j) {
            w1row[j] += dh[h] * t.input[j];
            dx[j] += pw1row[j] * dh[h];
          }
        }
        if (!mask[c]) {  // dropped CF contributes no gradient
          auto& g = gcf.try_emplace(pairs[start + c].second, d, 0.0)
                        .first->second;
          for (std::size_t k = 0; k < d; ++k) g[k] += dx[k];
        }
      }

      double lr = config.learning_rate;
      for (std::size_t i = 0; i < p.w1.data().size(); ++i) {
        p.w1.data()[i] -= lr * gw1.data()[i];
      }
      for (std::size_t h = 0; h < hidden; ++h) p.b1[h] -= lr * gb1[h];
      for (std::size_t i = 0; i < p.w2.data().size(); ++i) {
        p.w2.data()[i] -= lr * gw2.data()[i];
      }
      for (std::size_t k = 0; k < d; ++k) p.b2[k] -= lr * gb2[k];
      for (const auto& [item, g] : gcf) {
        auto row = p.cf_items.row(item);
        for (std::size_t k = 0; k < d; ++k) row[k] -= lr * g[k];
      }
      ++batches;
    }
    epoch_losses.push_back(loss_sum /
                           static_cast<double>(std::max<std::size_t>(1, batches)));
  }
  return {std::move(p), std::move(epoch_losses)};
}

std::vector<ItemId> dropoutnet_retrieve(
    std::span<const double> user_emb, const DropoutNetParams& params,
    const Matrix& content, const std::unordered_set<ItemId>& warm_items,
    const std::vector<ItemId>& candidates, const ImpressionLog& log,
    UserId user, std::size_t n) {
  std::vector<std::pair<ItemId, double>> scored;
  for (ItemId c : candidates) {
    if (log.was_shown(user, c)) continue;
    bool cold = warm_items.count(c) == 0;
    auto fused = dropoutnet_fuse(params, c, content, /*drop_cf=*/cold);
    scored.emplace_back(c, dot(user_emb, fused));
  }
  std::vector<ItemId> out;
  rank_and_truncate(scored, n, out);
  return out;
}

// --- Social ablations -------------------------------------------------

std::vector<ItemId> sge_retrieve(UserId user, const SocialGraph& graph,
                                 const EngagementBuffer& buffer,
                                 const ImpressionLog& log,
                                 const ItemCatalog& catalog, Timestamp now,
                                 std::size_t hops, std::size_t n) {
  if (hops == 0) throw std::invalid_argument("hops must be >= 1");

  std::vector<UserId> neighbors = graph.following(user);
  if (hops >= 2) {
    std::unordered_set<UserId> seen(neighbors.begin(), neighbors.end());
    seen.insert(user);
    std::vector<UserId> frontier = neighbors;
    for (std::size_t hop = 2; hop <= hops; ++hop) {
      std::vector<UserId> next;
      for (UserId v : frontier) {
        for (UserId w : graph.following(v)) {
          if (seen.insert(w).second) next.push_back(w);
        }
      }
      neighbors.insert(neighbors.end(), next.begin(), next.end());
      frontier = std::move(next);
    }
    std::sort(neighbors.begin(), neighbors.end());
  }

  std::map<ItemId, std::size_t> support;
  for (UserId nb : neighbors) {
    std::unordered_set<ItemId> seen_here;
    for (const auto& [item, at] : buffer.recent_items(nb, now)) {
      if (seen_here.insert(item).second) support[item] += 1;
    }
  }

  struct Row {
    ItemId item;
    std::size_t support;
    Timestamp created_at;
  };
  std::vector<Row> rows;
  for (const auto& [item, sup] : support) {
    if (log.was_shown(user, item)) continue;
    rows.push_back({item, sup, catalog.get(item).created_at});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.support != b.support) return a.support > b.support;
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.item < b.item;
  });
  std::vector<ItemId> out;
  for (const Row& r : rows) {
    if (out.size() >= n) break;
    out.push_back(r.item);
  }
  return out;
}

std::vector<ItemId> stage1_only_retrieve(UserId user,
                                         const ItemCatalog& catalog,
                                         const SocialGraph& graph,
                                         const ImpressionLog& log,
                                         Timestamp now, Duration max_item_age,
                                         std::size_t n) {
  std::vector<ItemId> fresh;
  for (UserId creator : graph.following(user)) {
    for (ItemId item : catalog.items_by_creator(creator)) {
      Duration age = now - catalog.get(item).created_at;
      if (age < 0 || age > max_item_age) continue;
      if (log.was_shown(user, item)) continue;
      fresh.push_back(item);
    }
  }
  std::sort(fresh.begin(), fresh.end(), [&](ItemId a, ItemId b) {
    Timestamp ca = catalog.get(a).created_at;
    Timestamp cb = catalog.get(b).created_at;
    if (ca != cb) return ca > cb;
    return a < b;
  });
  if (fresh.size() > n) fresh.resize(n);
  return fresh;
}

}  // namespace socripple
