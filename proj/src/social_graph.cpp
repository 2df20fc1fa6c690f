#include "socripple/social_graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace socripple {

namespace {

// Insert into a sorted vector, skipping duplicates. Returns true on insert.
bool sorted_insert(std::vector<UserId>& v, UserId id) {
  auto it = std::lower_bound(v.begin(), v.end(), id);
  if (it != v.end() && *it == id) return false;
  v.insert(it, id);
  return true;
}

const std::vector<UserId> kEmpty;

}  // namespace

void SocialGraph::ensure_slot(UserId id) {
  std::size_t need = static_cast<std::size_t>(id) + 1;
  if (followers_of_.size() < need) followers_of_.resize(need);
  if (following_of_.size() < need) following_of_.resize(need);
}

void SocialGraph::add_edge(UserId follower, UserId creator) {
  if (follower == creator) {
    throw std::invalid_argument("add_edge: self-edge rejected (user " +
                                std::to_string(follower) + ")");
  }
  if (num_users_ &&
      (follower >= *num_users_ || creator >= *num_users_)) {
    throw std::out_of_range("add_edge: id outside configured population");
  }
  ensure_slot(std::max(follower, creator));
  if (sorted_insert(followers_of_[creator], follower)) {
    sorted_insert(following_of_[follower], creator);
    ++num_edges_;
  }
}

const std::vector<UserId>& SocialGraph::followers_ref(UserId creator) const {
  if (creator >= followers_of_.size()) return kEmpty;
  return followers_of_[creator];
}

const std::vector<UserId>& SocialGraph::following_ref(UserId user) const {
  if (user >= following_of_.size()) return kEmpty;
  return following_of_[user];
}

std::vector<UserId> SocialGraph::followers(UserId creator) const {
  return followers_ref(creator);
}

std::vector<UserId> SocialGraph::following(UserId user) const {
  return following_ref(user);
}

bool SocialGraph::has_edge(UserId follower, UserId creator) const {
  const auto& f = followers_ref(creator);
  return std::binary_search(f.begin(), f.end(), follower);
}

SocialGraph SocialGraph::load_edges(const std::string& path,
                                    std::optional<std::size_t> num_users) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  SocialGraph g;
  if (num_users) g = SocialGraph(*num_users);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long follower = -1, creator = -1;
    if (!(ls >> follower >> creator) || follower < 0 || creator < 0) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed edge line: '" + line + "'");
    }
    std::string extra;
    if (ls >> extra) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": trailing tokens in edge line");
    }
    g.add_edge(static_cast<UserId>(follower), static_cast<UserId>(creator));
  }
  return g;
}

void SocialGraph::save_edges(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list: " + path);
  for (UserId c = 0; c < followers_of_.size(); ++c) {
    for (UserId f : followers_of_[c]) {
      out << f << ' ' << c << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace socripple
