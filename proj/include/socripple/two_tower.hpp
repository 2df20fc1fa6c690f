#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "socripple/matrix.hpp"
#include "socripple/types.hpp"

namespace socripple {

struct TrainConfig {
  std::size_t dim = 32;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  double init_scale = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

// Embedding tables; row index = id.
struct ModelParams {
  Matrix user_table;
  Matrix item_table;
  std::uint64_t seed = 0;

  std::size_t dim() const { return user_table.cols(); }
};

struct TrainBatch {
  std::vector<std::pair<UserId, ItemId>> pairs;

  std::size_t size() const { return pairs.size(); }
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;  // mean per-batch loss per epoch
};

// Gradients for the embedding rows a batch touches; absent rows are zero.
struct BatchGradients {
  std::map<UserId, std::vector<double>> user;
  std::map<ItemId, std::vector<double>> item;
};

// Dot-product affinity s(u, i). Throws on dimension mismatch.
double affinity(std::span<const double> user_emb, std::span<const double> item_emb);

// scores[r][c] = s(user_r, item_c) over the batch.
Matrix score_matrix(const ModelParams& params, const TrainBatch& batch);

// Softmax probability of the item in `positive_col` against the other
// in-batch items of `row`, computed with max-subtraction.
double in_batch_probability(const Matrix& batch_scores, std::size_t row,
                            std::size_t positive_col);
inline double in_batch_probability(const Matrix& batch_scores, std::size_t row) {
  return in_batch_probability(batch_scores, row, row);
}

// Negative log-likelihood of the batch diagonal under in-batch softmax.
double batch_loss(const ModelParams& params, const TrainBatch& batch);

BatchGradients batch_gradient(const ModelParams& params, const TrainBatch& batch);

// SGD over shuffled positive pairs; deterministic per seed. Events must
// all carry positive signals. Users/items absent from the events keep
// their random init.
TrainResult train(const std::vector<EngagementEvent>& events,
                  std::size_t num_users, std::size_t num_items,
                  const TrainConfig& config);

std::map<UserId, std::vector<double>> export_user_embeddings(
    const ModelParams& params);

// Embedding table file: header `d=<dim> n=<count>`, then one row per id:
// `<id> <v_0> ... <v_{d-1}>`. Values round-trip exactly.
void save_embedding_table(const std::string& path, const Matrix& table);
Matrix load_embedding_table(const std::string& path);

}  // namespace socripple
