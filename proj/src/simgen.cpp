#include "socripple/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "socripple/rng.hpp"
#include "socripple/two_tower.hpp"

namespace socripple {

namespace fs = std::filesystem;

void WorldConfig::validate() const {
  if (num_users == 0 || num_creators == 0 || num_items == 0 || d_latent == 0 ||
      num_topics == 0) {
    throw std::invalid_argument("world counts must be positive");
  }
  if (num_creators > num_users) {
    throw std::invalid_argument("creators are users; num_creators > num_users");
  }
  if (horizon_days <= 0 || split_day <= 0 || split_day >= horizon_days) {
    throw std::invalid_argument("split time must fall inside the horizon");
  }
  if (mean_follows <= 0 || exposures_per_user_per_day <= 0 || base_rate <= 0 ||
      base_rate > 1 || affinity_scale <= 0 || cold_window <= 0) {
    throw std::invalid_argument("engagement knobs must be positive");
  }
  if (follow_bias < 0 || follow_bias > 1 || fresh_bias < 0 || fresh_bias > 1) {
    throw std::invalid_argument("exposure biases must lie in [0, 1]");
  }
}

bool World::operator==(const World& other) const {
  return user_latents == other.user_latents &&
         item_latents == other.item_latents && content == other.content &&
         catalog.items() == other.catalog.items() && events == other.events &&
         graph == other.graph;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void gaussian_row(std::span<double> row, Rng& rng) {
  for (double& x : row) x = rng.next_gaussian();
}

void add_scaled(std::span<double> dst, std::span<const double> src,
                double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

void normalize(std::span<double> v) {
  double n = l2_norm(v);
  if (n == 0.0) {
    v[0] = 1.0;
    return;
  }
  for (double& x : v) x /= n;
}

// Latent = unit(center[topic] + noise * gauss).
Matrix topic_latents(std::size_t n, const Matrix& centers, double noise,
                     Rng& rng) {
  Matrix out(n, centers.cols());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t topic = rng.next_below(centers.rows());
    auto row = out.row(i);
    gaussian_row(row, rng);
    for (double& x : row) x *= noise;
    add_scaled(row, centers.row(topic), 1.0);
    normalize(row);
  }
  return out;
}

}  // namespace

World gen_world(const WorldConfig& config) {
  config.validate();
  World w;
  w.config = config;

  Rng root(config.seed);
  Rng latent_rng = root.fork(11);
  Rng graph_rng = root.fork(12);
  Rng item_rng = root.fork(13);
  Rng event_rng = root.fork(14);

  Matrix centers(config.num_topics, config.d_latent);
  for (std::size_t t = 0; t < config.num_topics; ++t) {
    auto row = centers.row(t);
    gaussian_row(row, latent_rng);
    normalize(row);
  }
  w.user_latents =
      topic_latents(config.num_users, centers, config.user_noise, latent_rng);

  // --- follower graph: preferential attachment x homophily ---
  w.graph = SocialGraph(config.num_users);
  std::vector<std::size_t> degree(config.num_creators, 0);
  std::vector<UserId> order(config.num_users);
  for (UserId u = 0; u < config.num_users; ++u) order[u] = u;
  graph_rng.shuffle(order);

  std::vector<double> weights(config.num_creators);
  for (UserId u : order) {
    auto lat_u = w.user_latents.row(u);
    double total = 0.0;
    for (std::size_t c = 0; c < config.num_creators; ++c) {
      if (c == u) {
        weights[c] = 0.0;
        continue;
      }
      double pa = std::pow(static_cast<double>(degree[c]) + 1.0,
                           config.attachment_exponent);
      double hom = std::exp(config.homophily_strength *
                            dot(lat_u, w.user_latents.row(c)));
      weights[c] = pa * hom;
      total += weights[c];
    }
    // Follow count: geometric-ish spread around the mean, at least one.
    double raw = -config.mean_follows * std::log(1.0 - graph_rng.next_double());
    auto n_follows = static_cast<std::size_t>(std::max(1.0, std::round(raw)));
    n_follows = std::min(n_follows, config.num_creators - 1);

    for (std::size_t pick = 0; pick < n_follows && total > 0.0; ++pick) {
      double r = graph_rng.next_double() * total;
      std::size_t chosen = config.num_creators - 1;
      double acc = 0.0;
      for (std::size_t c = 0; c < config.num_creators; ++c) {
        acc += weights[c];
        if (r < acc) {
          chosen = c;
          break;
        }
      }
      if (weights[chosen] == 0.0) continue;
      w.graph.add_edge(u, static_cast<UserId>(chosen));
      degree[chosen] += 1;
      total -= weights[chosen];
      weights[chosen] = 0.0;  // without replacement
    }
  }

  // --- items: uniform upload times, ids assigned in time order ---
  struct Upload {
    Timestamp at;
    UserId creator;
  };
  std::vector<Upload> uploads(config.num_items);
  for (auto& up : uploads) {
    up.at = static_cast<Timestamp>(item_rng.next_double() *
                                   static_cast<double>(w.config.horizon()));
    up.creator = static_cast<UserId>(item_rng.next_below(config.num_creators));
  }
  std::sort(uploads.begin(), uploads.end(), [](const Upload& a, const Upload& b) {
    return a.at < b.at;
  });

  w.item_latents = Matrix(config.num_items, config.d_latent);
  w.content = Matrix(config.num_items, config.d_latent);
  for (ItemId i = 0; i < config.num_items; ++i) {
    w.catalog.add({i, uploads[i].creator, uploads[i].at});
    auto creator_lat = w.user_latents.row(uploads[i].creator);

    auto lat = w.item_latents.row(i);
    gaussian_row(lat, item_rng);
    for (double& x : lat) x *= config.item_noise;
    add_scaled(lat, creator_lat, 1.0);
    normalize(lat);

    auto ct = w.content.row(i);
    gaussian_row(ct, item_rng);
    for (double& x : ct) x *= config.content_noise;
    add_scaled(ct, creator_lat, 1.0);
    normalize(ct);
  }

  // --- exposure opportunities ---
  struct Opportunity {
    Timestamp at;
    UserId user;
  };
  std::vector<Opportunity> opps;
  double base_count = config.exposures_per_user_per_day * config.horizon_days;
  for (UserId u = 0; u < config.num_users; ++u) {
    double activity = std::exp(config.activity_sigma * event_rng.next_gaussian() -
                               0.5 * config.activity_sigma * config.activity_sigma);
    double rate = base_count * activity;
    double n = std::round(rate + std::sqrt(rate) * event_rng.next_gaussian());
    auto count = static_cast<std::size_t>(std::max(0.0, n));
    for (std::size_t i = 0; i < count; ++i) {
      opps.push_back({static_cast<Timestamp>(event_rng.next_double() *
                                             static_cast<double>(w.config.horizon())),
                      u});
    }
  }
  std::sort(opps.begin(), opps.end(), [](const Opportunity& a, const Opportunity& b) {
    if (a.at != b.at) return a.at < b.at;
    return a.user < b.user;
  });

  const auto& by_time = w.catalog.by_creation_time();  // == ascending id
  std::unordered_set<std::uint64_t> exposed;
  exposed.reserve(opps.size() * 2);
  auto exposure_key = [](UserId u, ItemId i) {
    return (static_cast<std::uint64_t>(u) << 32) | i;
  };

  w.events.reserve(opps.size());
  std::size_t next_item = 0;  // items with created_at <= t, by id order
  for (const auto& opp : opps) {
    while (next_item < by_time.size() &&
           w.catalog.get(by_time[next_item]).created_at <= opp.at) {
      ++next_item;
    }
    if (next_item == 0) continue;  // nothing uploaded yet

    // Fresh range [fresh_lo, next_item): age within the cold window.
    std::size_t fresh_lo = next_item;
    while (fresh_lo > 0 &&
           opp.at - w.catalog.get(by_time[fresh_lo - 1]).created_at <=
               config.cold_window) {
      --fresh_lo;
    }

    ItemId picked = 0;
    bool have = false;
    double roll = event_rng.next_double();
    for (int attempt = 0; attempt < 4 && !have; ++attempt) {
      ItemId cand = 0;
      if (roll < config.follow_bias) {
        // A fresh item from a followed creator, if any exists.
        std::vector<ItemId> pool;
        for (UserId c : w.graph.following(opp.user)) {
          const auto& its = w.catalog.items_by_creator(c);
          for (auto it = its.rbegin(); it != its.rend(); ++it) {
            Duration age = opp.at - w.catalog.get(*it).created_at;
            if (age < 0) continue;
            if (age > config.cold_window) break;  // id order == time order
            pool.push_back(*it);
          }
        }
        if (!pool.empty()) {
          cand = pool[event_rng.next_below(pool.size())];
        } else {
          roll = config.follow_bias;  // fall through to the fresh pool
          continue;
        }
      } else if (roll < config.follow_bias +
                            (1.0 - config.follow_bias) * config.fresh_bias &&
                 fresh_lo < next_item) {
        cand = by_time[fresh_lo + event_rng.next_below(next_item - fresh_lo)];
      } else {
        cand = by_time[event_rng.next_below(next_item)];
      }
      if (!exposed.count(exposure_key(opp.user, cand))) {
        picked = cand;
        have = true;
      }
    }
    if (!have) continue;
    exposed.insert(exposure_key(opp.user, picked));

    double cos_ui = dot(w.user_latents.row(opp.user), w.item_latents.row(picked));
    double p = config.base_rate * sigmoid(config.affinity_scale * cos_ui);
    double draw = event_rng.next_double();
    Signal signal;
    if (draw < p) {
      signal = draw < p * 0.5 ? Signal::kLike : Signal::kLongView;
    } else {
      signal = event_rng.next_double() < 0.5 ? Signal::kView : Signal::kSkip;
    }
    w.events.push_back({opp.user, picked, opp.at, signal});
  }

  return w;
}

std::pair<std::vector<EngagementEvent>, std::vector<EngagementEvent>> split(
    const World& world, Timestamp split_time) {
  if (split_time < 0 || split_time > world.config.horizon()) {
    throw std::invalid_argument("split time outside horizon");
  }
  std::vector<EngagementEvent> train, test;
  for (const auto& e : world.events) {
    if (e.at < split_time) {
      train.push_back(e);
    } else if (is_positive(e.signal)) {
      Duration age = e.at - world.catalog.get(e.item).created_at;
      if (age >= 0 && age <= world.config.cold_window) test.push_back(e);
    }
  }
  return {std::move(train), std::move(test)};
}

void replay(const World& world, Timestamp until, EngagementBuffer& buffer,
            ImpressionLog& log) {
  for (const auto& e : world.events) {
    if (e.at >= until) break;  // events are time-ordered
    log.mark_shown(e.user, e.item, e.at);
    if (is_positive(e.signal)) {
      buffer.record(e, world.catalog.get(e.item).created_at);
    }
  }
}

void save_world(const World& world, const std::string& dir) {
  fs::create_directories(dir);
  world.graph.save_edges(dir + "/edges.txt");
  save_catalog(dir + "/items.jsonl", world.catalog);
  save_events(dir + "/events.jsonl", world.events);
  save_embedding_table(dir + "/content.txt", world.content);
  save_embedding_table(dir + "/user_latents.txt", world.user_latents);
  save_embedding_table(dir + "/item_latents.txt", world.item_latents);

  const WorldConfig& c = world.config;
  nlohmann::json j{{"num_users", c.num_users},
                   {"num_creators", c.num_creators},
                   {"num_items", c.num_items},
                   {"d_latent", c.d_latent},
                   {"num_topics", c.num_topics},
                   {"user_noise", c.user_noise},
                   {"item_noise", c.item_noise},
                   {"content_noise", c.content_noise},
                   {"mean_follows", c.mean_follows},
                   {"attachment_exponent", c.attachment_exponent},
                   {"homophily_strength", c.homophily_strength},
                   {"exposures_per_user_per_day", c.exposures_per_user_per_day},
                   {"activity_sigma", c.activity_sigma},
                   {"base_rate", c.base_rate},
                   {"affinity_scale", c.affinity_scale},
                   {"follow_bias", c.follow_bias},
                   {"fresh_bias", c.fresh_bias},
                   {"horizon_days", c.horizon_days},
                   {"split_day", c.split_day},
                   {"cold_window", c.cold_window},
                   {"seed", c.seed}};
  std::ofstream out(dir + "/world.json");
  if (!out) throw std::runtime_error("cannot write world manifest");
  out << j.dump(2) << "\n";
}

World load_world(const std::string& dir) {
  std::ifstream in(dir + "/world.json");
  if (!in) throw std::runtime_error("cannot open world manifest in " + dir);
  nlohmann::json j;
  in >> j;

  World w;
  WorldConfig& c = w.config;
  c.num_users = j.at("num_users").get<std::size_t>();
  c.num_creators = j.at("num_creators").get<std::size_t>();
  c.num_items = j.at("num_items").get<std::size_t>();
  c.d_latent = j.at("d_latent").get<std::size_t>();
  c.num_topics = j.at("num_topics").get<std::size_t>();
  c.user_noise = j.at("user_noise").get<double>();
  c.item_noise = j.at("item_noise").get<double>();
  c.content_noise = j.at("content_noise").get<double>();
  c.mean_follows = j.at("mean_follows").get<double>();
  c.attachment_exponent = j.at("attachment_exponent").get<double>();
  c.homophily_strength = j.at("homophily_strength").get<double>();
  c.exposures_per_user_per_day = j.at("exposures_per_user_per_day").get<double>();
  c.activity_sigma = j.at("activity_sigma").get<double>();
  c.base_rate = j.at("base_rate").get<double>();
  c.affinity_scale = j.at("affinity_scale").get<double>();
  c.follow_bias = j.at("follow_bias").get<double>();
  c.fresh_bias = j.at("fresh_bias").get<double>();
  c.horizon_days = j.at("horizon_days").get<double>();
  c.split_day = j.at("split_day").get<double>();
  c.cold_window = j.at("cold_window").get<Duration>();
  c.seed = j.at("seed").get<std::uint64_t>();

  w.graph = SocialGraph::load_edges(dir + "/edges.txt", c.num_users);
  w.catalog = load_catalog(dir + "/items.jsonl");
  w.events = load_events(dir + "/events.jsonl");
  w.content = load_embedding_table(dir + "/content.txt");
  w.user_latents = load_embedding_table(dir + "/user_latents.txt");
  w.item_latents = load_embedding_table(dir + "/item_latents.txt");
  return w;
}

}  // namespace socripple
