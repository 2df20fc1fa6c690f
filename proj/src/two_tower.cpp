#include "socripple/two_tower.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "socripple/rng.hpp"

namespace socripple {

void TrainConfig::validate() const {
  if (dim == 0 || epochs == 0 || batch_size == 0) {
    throw std::invalid_argument("train config counts must be positive");
  }
  if (learning_rate <= 0.0 || init_scale <= 0.0) {
    throw std::invalid_argument("train config rates must be positive");
  }
}

double affinity(std::span<const double> user_emb,
                std::span<const double> item_emb) {
  return dot(user_emb, item_emb);
}

namespace {

void check_batch(const ModelParams& params, const TrainBatch& batch) {
  if (batch.pairs.empty()) throw std::invalid_argument("empty batch");
  for (const auto& [u, i] : batch.pairs) {
    if (u >= params.user_table.rows()) {
      throw std::out_of_range("user id outside vocabulary: " + std::to_string(u));
    }
    if (i >= params.item_table.rows()) {
      throw std::out_of_range("item id outside vocabulary: " + std::to_string(i));
    }
  }
}

// Softmax of one score row with max-subtraction; returns probabilities.
std::vector<double> softmax_row(const Matrix& scores, std::size_t row) {
  std::size_t n = scores.cols();
  double mx = scores.at(row, 0);
  for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, scores.at(row, c));
  std::vector<double> p(n);
  double denom = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    p[c] = std::exp(scores.at(row, c) - mx);
    denom += p[c];
  }
  for (double& x : p) x /= denom;
  return p;
}

}  // namespace

Matrix score_matrix(const ModelParams& params, const TrainBatch& batch) {
  check_batch(params, batch);
  std::size_t b = batch.size();
  Matrix scores(b, b);
  for (std::size_t r = 0; r < b; ++r) {
    auto u = params.user_table.row(batch.pairs[r].first);
    for (std::size_t c = 0; c < b; ++c) {
      scores.at(r, c) = dot(u, params.item_table.row(batch.pairs[c].second));
    }
  }
  return scores;
}

double in_batch_probability(const Matrix& batch_scores, std::size_t row,
                            std::size_t positive_col) {
  if (row >= batch_scores.rows() || positive_col >= batch_scores.cols()) {
    throw std::out_of_range("row/col outside batch");
  }
  return softmax_row(batch_scores, row)[positive_col];
}

double batch_loss(const ModelParams& params, const TrainBatch& batch) {
  Matrix scores = score_matrix(params, batch);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    loss -= std::log(softmax_row(scores, r)[r]);
  }
  return loss;
}

BatchGradients batch_gradient(const ModelParams& params,
                              const TrainBatch& batch) {
  Matrix scores = score_matrix(params, batch);
  std::size_t b = batch.size();
  std::size_t d = params.dim();

  BatchGradients grads;
  for (const auto& [u, i] : batch.pairs) {
    grads.user.try_emplace(u, d, 0.0);
    grads.item.try_emplace(i, d, 0.0);
  }

  // dL/ds[r][c] = p[r][c] - 1{c == r}, then chain through the dot product.
  for (std::size_t r = 0; r < b; ++r) {
    auto p = softmax_row(scores, r);
    auto u_row = params.user_table.row(batch.pairs[r].first);
    auto& gu = grads.user[batch.pairs[r].first];
    for (std::size_t c = 0; c < b; ++c) {
      double g = p[c] - (c == r ? 1.0 : 0.0);
      auto i_row = params.item_table.row(batch.pairs[c].second);
      auto& gi = grads.item[batch.pairs[c].second];
      for (std::size_t k = 0; k < d; ++k) {
        gu[k] += g * i_row[k];
        gi[k] += g * u_row[k];
      }
    }
  }
  return grads;
}

TrainResult train(const std::vector<EngagementEvent>& events,
                  std::size_t num_users, std::size_t num_items,
                  const TrainConfig& config) {
  config.validate();
  if (events.empty()) throw std::invalid_argument("no training events");
  for (const auto& e : events) {
    if (!is_positive(e.signal)) {
      throw std::invalid_argument("training events must be positive signals");
    }
    if (e.user >= num_users || e.item >= num_items) {
      throw std::out_of_range("event references id outside vocabulary");
    }
  }

  Rng root(config.seed);
  Rng init_rng = root.fork(1);
  Rng shuffle_rng = root.fork(2);

  ModelParams params;
  params.seed = config.seed;
  params.user_table = Matrix(num_users, config.dim);
  params.item_table = Matrix(num_items, config.dim);
  for (double& x : params.user_table.data()) {
    x = init_rng.uniform(-config.init_scale, config.init_scale);
  }
  for (double& x : params.item_table.data()) {
    x = init_rng.uniform(-config.init_scale, config.init_scale);
  }

  std::vector<std::pair<UserId, ItemId>> pairs;
  pairs.reserve(events.size());
  for (const auto& e : events) pairs.emplace_back(e.user, e.item);

  std::vector<double> epoch_losses;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(pairs);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < pairs.size();
         start += config.batch_size) {
      std::size_t end = std::min(start + config.batch_size, pairs.size());
      TrainBatch batch;
      batch.pairs.assign(pairs.begin() + start, pairs.begin() + end);

      Matrix scores = score_matrix(params, batch);
      std::size_t b = batch.size();
      double batch_nll = 0.0;

      BatchGradients grads;
      for (const auto& [u, i] : batch.pairs) {
        grads.user.try_emplace(u, config.dim, 0.0);
        grads.item.try_emplace(i, config.dim, 0.0);
      }
      for (std::size_t r = 0; r < b; ++r) {
        auto p = softmax_row(scores, r);
        batch_nll -= std::log(p[r]);
        auto u_row = params.user_table.row(batch.pairs[r].first);
        auto& gu = grads.user[batch.pairs[r].first];
        for (std::size_t c = 0; c < b; ++c) {
          double g = p[c] - (c == r ? 1.0 : 0.0);
          auto i_row = params.item_table.row(batch.pairs[c].second);
          auto& gi = grads.item[batch.pairs[c].second];
          for (std::size_t k = 0; k < config.dim; ++k) {
            gu[k] += g * i_row[k];
            gi[k] += g * u_row[k];
          }
        }
      }

      for (const auto& [u, g] : grads.user) {
        auto row = params.user_table.row(u);
        for (std::size_t k = 0; k < config.dim; ++k) {
          row[k] -= config.learning_rate * g[k];
        }
      }
      for (const auto& [i, g] : grads.item) {
        auto row = params.item_table.row(i);
        for (std::size_t k = 0; k < config.dim; ++k) {
          row[k] -= config.learning_rate * g[k];
        }
      }

      loss_sum += batch_nll;
      ++batches;
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(batches));
  }

  for (double x : params.user_table.data()) {
    if (!std::isfinite(x)) throw std::runtime_error("training diverged (user table)");
  }
  for (double x : params.item_table.data()) {
    if (!std::isfinite(x)) throw std::runtime_error("training diverged (item table)");
  }
  return {std::move(params), std::move(epoch_losses)};
}

std::map<UserId, std::vector<double>> export_user_embeddings(
    const ModelParams& params) {
  std::map<UserId, std::vector<double>> out;
  for (std::size_t u = 0; u < params.user_table.rows(); ++u) {
    auto row = params.user_table.row(u);
    out.emplace(static_cast<UserId>(u),
                std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

void save_embedding_table(const std::string& path, const Matrix& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  out << "d=" << table.cols() << " n=" << table.rows() << "\n";
  out << std::setprecision(17);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << r;
    for (double v : table.row(r)) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Matrix load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("empty embedding file: " + path);
  }
  std::size_t d = 0, n = 0;
  if (std::sscanf(header.c_str(), "d=%zu n=%zu", &d, &n) != 2) {
    throw std::runtime_error("bad embedding header in " + path + ": " + header);
  }
  Matrix table(n, d);
  std::string line;
  std::vector<bool> seen(n, false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t id = 0;
    if (!(ls >> id) || id >= n) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad row id");
    }
    auto row = table.row(id);
    for (std::size_t k = 0; k < d; ++k) {
      if (!(ls >> row[k])) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": truncated row");
      }
    }
    seen[id] = true;
  }
  for (std::size_t id = 0; id < n; ++id) {
    if (!seen[id]) {
      throw std::runtime_error(path + ": missing row for id " +
                               std::to_string(id));
    }
  }
  return table;
}

}  // namespace socripple
