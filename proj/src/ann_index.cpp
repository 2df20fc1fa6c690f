#include "socripple/ann_index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <queue>

#include "socripple/rng.hpp"

namespace socripple {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

struct Scored {
  double sim;
  std::uint32_t slot;
};

// Higher similarity first, ties by ascending slot (== ascending id,
// since slots are id-sorted).
bool better(const Scored& a, const Scored& b) {
  if (a.sim != b.sim) return a.sim > b.sim;
  return a.slot < b.slot;
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("index snapshot truncated");
}

}  // namespace

UserIndex UserIndex::build(const std::map<UserId, std::vector<double>>& embeddings,
                           IndexMode mode, const AnnBuildParams& params) {
  if (embeddings.empty()) throw std::invalid_argument("no embeddings to index");
  std::size_t d = embeddings.begin()->second.size();
  if (d == 0) throw std::invalid_argument("zero-dimensional embeddings");

  UserIndex index;
  index.mode_ = mode;
  index.params_ = params;
  index.ids_.reserve(embeddings.size());
  index.vectors_ = Matrix(embeddings.size(), d);

  std::size_t slot = 0;
  for (const auto& [id, vec] : embeddings) {
    if (vec.size() != d) {
      throw std::invalid_argument("embedding dimension mismatch for user " +
                                  std::to_string(id));
    }
    double norm = l2_norm(vec);
    if (norm == 0.0) {
      throw std::invalid_argument("zero vector for user " + std::to_string(id));
    }
    index.ids_.push_back(id);
    auto row = index.vectors_.row(slot);
    for (std::size_t k = 0; k < d; ++k) row[k] = vec[k] / norm;
    ++slot;
  }

  if (mode == IndexMode::kApproximate) index.build_graph();
  return index;
}

void UserIndex::build_graph() {
  std::size_t n = ids_.size();
  std::size_t degree = std::min(params_.graph_degree, n > 0 ? n - 1 : 0);
  edges_.assign(n, {});

  // kNN edges from an exhaustive pass, mutualized.
  std::vector<Scored> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto vi = vectors_.row(i);
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row.push_back({dot(vi, vectors_.row(j)), static_cast<std::uint32_t>(j)});
    }
    std::partial_sort(row.begin(), row.begin() + degree, row.end(), better);
    for (std::size_t k = 0; k < degree; ++k) {
      edges_[i].push_back(row[k].slot);
      edges_[row[k].slot].push_back(static_cast<std::uint32_t>(i));
    }
  }

  // Seeded long-range shortcuts keep the graph navigable from any entry.
  Rng rng(params_.seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < params_.random_links && n > 1; ++r) {
      auto j = static_cast<std::uint32_t>(rng.next_below(n));
      if (j != i) edges_[i].push_back(j);
    }
  }

  for (auto& adj : edges_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
}

std::size_t UserIndex::slot_of(UserId user) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), user);
  if (it == ids_.end() || *it != user) {
    throw std::out_of_range("user not in index: " + std::to_string(user));
  }
  return static_cast<std::size_t>(it - ids_.begin());
}

bool UserIndex::contains(UserId user) const {
  return std::binary_search(ids_.begin(), ids_.end(), user);
}

std::span<const double> UserIndex::vector_of(UserId user) const {
  return vectors_.row(slot_of(user));
}

double UserIndex::similarity(UserId a, UserId b) const {
  return dot(vectors_.row(slot_of(a)), vectors_.row(slot_of(b)));
}

NeighborList UserIndex::exact_knn(std::size_t query_slot, std::size_t k) const {
  auto q = vectors_.row(query_slot);
  std::vector<Scored> scored;
  scored.reserve(ids_.size() - 1);
  for (std::size_t j = 0; j < ids_.size(); ++j) {
    if (j == query_slot) continue;
    scored.push_back({dot(q, vectors_.row(j)), static_cast<std::uint32_t>(j)});
  }
  std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), better);
  NeighborList out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({ids_[scored[i].slot], scored[i].sim});
  }
  return out;
}

NeighborList UserIndex::approx_knn(std::size_t query_slot, std::size_t k) const {
  auto q = vectors_.row(query_slot);
  std::size_t n = ids_.size();
  std::size_t ef = std::max(params_.search_breadth, k + 1);

  std::vector<char> visited(n, 0);
  // Max-heap of candidates to expand; `found` keeps the best `ef` seen.
  auto cand_cmp = [](const Scored& a, const Scored& b) { return better(b, a); };
  std::priority_queue<Scored, std::vector<Scored>, decltype(cand_cmp)> frontier(cand_cmp);
  std::vector<Scored> found;

  auto visit = [&](std::uint32_t slot) {
    if (visited[slot]) return;
    visited[slot] = 1;
    Scored s{dot(q, vectors_.row(slot)), slot};
    frontier.push(s);
    if (slot != query_slot) found.push_back(s);
  };

  // The query is a member: its own edges already point at near-exact
  // neighbors. A few strided entries guard against isolated regions.
  visit(static_cast<std::uint32_t>(query_slot));
  std::size_t stride = std::max<std::size_t>(1, n / 8);
  for (std::size_t s = 0; s < n; s += stride) {
    visit(static_cast<std::uint32_t>(s));
  }

  std::size_t expansions = 0;
  while (!frontier.empty() && expansions < ef) {
    Scored cur = frontier.top();
    frontier.pop();
    ++expansions;
    for (std::uint32_t nb : edges_[cur.slot]) visit(nb);
  }

  std::size_t take = std::min(k, found.size());
  std::partial_sort(found.begin(), found.begin() + take, found.end(), better);
  NeighborList out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({ids_[found[i].slot], found[i].sim});
  }
  return out;
}

NeighborList UserIndex::knn(UserId query, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  std::size_t slot = slot_of(query);
  return mode_ == IndexMode::kExact ? exact_knn(slot, k) : approx_knn(slot, k);
}

std::vector<NeighborList> UserIndex::knn_batch(const std::vector<UserId>& queries,
                                               std::size_t k) const {
  std::vector<NeighborList> out;
  out.reserve(queries.size());
  for (UserId q : queries) out.push_back(knn(q, k));
  return out;
}

void UserIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index snapshot: " + path);
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint8_t>(mode_));
  write_pod(out, params_);
  auto n = static_cast<std::uint64_t>(ids_.size());
  auto d = static_cast<std::uint64_t>(vectors_.cols());
  write_pod(out, n);
  write_pod(out, d);
  out.write(reinterpret_cast<const char*>(ids_.data()),
            static_cast<std::streamsize>(ids_.size() * sizeof(UserId)));
  out.write(reinterpret_cast<const char*>(vectors_.data().data()),
            static_cast<std::streamsize>(vectors_.data().size() * sizeof(double)));
  auto n_adj = static_cast<std::uint64_t>(edges_.size());
  write_pod(out, n_adj);
  for (const auto& adj : edges_) {
    auto len = static_cast<std::uint64_t>(adj.size());
    write_pod(out, len);
    out.write(reinterpret_cast<const char*>(adj.data()),
              static_cast<std::streamsize>(adj.size() * sizeof(std::uint32_t)));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

UserIndex UserIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index snapshot: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not an index snapshot: " + path);
  }
  std::uint32_t version = 0;
  read_pod(in, version);
  if (version != kVersion) {
    throw std::runtime_error("index snapshot version mismatch: " +
                             std::to_string(version));
  }
  UserIndex index;
  std::uint8_t mode = 0;
  read_pod(in, mode);
  index.mode_ = static_cast<IndexMode>(mode);
  read_pod(in, index.params_);
  std::uint64_t n = 0, d = 0;
  read_pod(in, n);
  read_pod(in, d);
  index.ids_.resize(n);
  in.read(reinterpret_cast<char*>(index.ids_.data()),
          static_cast<std::streamsize>(n * sizeof(UserId)));
  index.vectors_ = Matrix(n, d);
  in.read(reinterpret_cast<char*>(index.vectors_.data().data()),
          static_cast<std::streamsize>(n * d * sizeof(double)));
  if (!in) throw std::runtime_error("index snapshot truncated");
  std::uint64_t n_adj = 0;
  read_pod(in, n_adj);
  index.edges_.resize(n_adj);
  for (auto& adj : index.edges_) {
    std::uint64_t len = 0;
    read_pod(in, len);
    adj.resize(len);
    in.read(reinterpret_cast<char*>(adj.data()),
            static_cast<std::streamsize>(len * sizeof(std::uint32_t)));
    if (!in) throw std::runtime_error("index snapshot truncated");
  }
  return index;
}

}  // namespace socripple
