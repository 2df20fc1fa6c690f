#pragma once

#include <optional>
#include <string>
#include <vector>

#include "socripple/types.hpp"

namespace socripple {

// Directed follower graph: an edge (follower -> creator) means
// `follower` follows `creator`. Adjacency is kept in both directions;
// neighbor lists are returned in ascending id order. Immutable once an
// experiment run starts; mutation is only for construction and the
// live-service path.
class SocialGraph {
 public:
  SocialGraph() = default;

  // When a population size is given, ids >= num_users are rejected.
  explicit SocialGraph(std::size_t num_users) : num_users_(num_users) {}

  // Idempotent; throws on self-edges and (when sized) unknown ids.
  void add_edge(UserId follower, UserId creator);

  std::vector<UserId> followers(UserId creator) const;
  std::vector<UserId> following(UserId user) const;

  bool has_edge(UserId follower, UserId creator) const;
  std::size_t num_edges() const { return num_edges_; }
  std::optional<std::size_t> num_users() const { return num_users_; }

  // Edge list file: one `<follower> <creator>` pair per line, `#` lines
  // ignored. Duplicate lines collapse to one edge.
  static SocialGraph load_edges(const std::string& path,
                                std::optional<std::size_t> num_users = {});
  void save_edges(const std::string& path) const;

  bool operator==(const SocialGraph&) const = default;

 private:
  void ensure_slot(UserId id);
  const std::vector<UserId>& followers_ref(UserId creator) const;
  const std::vector<UserId>& following_ref(UserId user) const;

  std::optional<std::size_t> num_users_;
  std::size_t num_edges_ = 0;
  // Sorted ascending; index = user id.
  std::vector<std::vector<UserId>> followers_of_;
  std::vector<std::vector<UserId>> following_of_;
};

}  // namespace socripple
