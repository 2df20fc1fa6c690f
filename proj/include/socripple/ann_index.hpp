#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "socripple/matrix.hpp"
#include "socripple/types.hpp"

namespace socripple {

enum class IndexMode : std::uint8_t { kExact, kApproximate };

struct AnnBuildParams {
  std::size_t graph_degree = 32;    // kNN edges kept per node
  std::size_t random_links = 8;     // extra seeded shortcut edges per node
  std::size_t search_breadth = 600; // beam width at query time
  std::uint64_t seed = 42;
};

struct Neighbor {
  UserId user = 0;
  double similarity = 0.0;

  bool operator==(const Neighbor&) const = default;
};

// Similarities non-increasing, ties broken by ascending id, never
// contains the query user.
using NeighborList = std::vector<Neighbor>;

// Cosine KNN over exported user embeddings. Vectors are L2-normalized
// at build time; similarity is the dot product of normalized vectors.
// Exact mode scans exhaustively; approximate mode beam-searches a
// neighbor graph. Immutable after build; refreshes rebuild from scratch.
class UserIndex {
 public:
  static UserIndex build(const std::map<UserId, std::vector<double>>& embeddings,
                         IndexMode mode = IndexMode::kExact,
                         const AnnBuildParams& params = {});

  NeighborList knn(UserId query, std::size_t k) const;
  std::vector<NeighborList> knn_batch(const std::vector<UserId>& queries,
                                      std::size_t k) const;

  bool contains(UserId user) const;
  // Normalized stored vector for a member user.
  std::span<const double> vector_of(UserId user) const;
  double similarity(UserId a, UserId b) const;

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return vectors_.cols(); }
  IndexMode mode() const { return mode_; }
  const std::vector<UserId>& ids() const { return ids_; }

  // Binary snapshot with version tag; load rejects mismatched or
  // truncated files.
  void save(const std::string& path) const;
  static UserIndex load(const std::string& path);

 private:
  std::size_t slot_of(UserId user) const;
  NeighborList exact_knn(std::size_t query_slot, std::size_t k) const;
  NeighborList approx_knn(std::size_t query_slot, std::size_t k) const;
  void build_graph();

  IndexMode mode_ = IndexMode::kExact;
  AnnBuildParams params_;
  std::vector<UserId> ids_;           // ascending
  Matrix vectors_;                    // row i belongs to ids_[i], unit norm
  std::vector<std::vector<std::uint32_t>> edges_;  // approximate mode only
};

}  // namespace socripple
