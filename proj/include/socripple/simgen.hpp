#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socripple/engagement.hpp"
#include "socripple/matrix.hpp"
#include "socripple/social_graph.hpp"
#include "socripple/types.hpp"

namespace socripple {

struct WorldConfig {
  std::size_t num_users = 10000;
  std::size_t num_creators = 500;  // creators are users 0..num_creators-1
  std::size_t num_items = 5000;
  std::size_t d_latent = 16;

  // Interest structure: users/creators cluster around topic centers.
  std::size_t num_topics = 12;
  double user_noise = 0.45;
  double item_noise = 0.25;
  double content_noise = 0.9;  // content features are a blurry proxy

  // Follower graph: preferential attachment x interest homophily.
  double mean_follows = 15.0;
  double attachment_exponent = 0.8;
  double homophily_strength = 2.0;

  // Exposure/engagement dynamics.
  double exposures_per_user_per_day = 8.0;
  double activity_sigma = 0.6;  // lognormal per-user activity spread
  double base_rate = 0.55;      // positive cap at perfect affinity
  double affinity_scale = 4.0;  // sigmoid sharpness on latent cosine
  double follow_bias = 0.35;    // exposure prob mass on followed creators
  double fresh_bias = 0.6;      // exposure prob mass on <=24h items

  double horizon_days = 7.0;
  double split_day = 6.0;
  Duration cold_window = kDay;

  std::uint64_t seed = 1;

  Timestamp horizon() const {
    return static_cast<Timestamp>(horizon_days * static_cast<double>(kDay));
  }
  Timestamp split_time() const {
    return static_cast<Timestamp>(split_day * static_cast<double>(kDay));
  }
  void validate() const;
};

struct World {
  WorldConfig config;
  SocialGraph graph;
  Matrix user_latents;   // num_users x d_latent, unit rows
  Matrix item_latents;   // num_items x d_latent, unit rows
  Matrix content;        // num_items x d_latent, unit rows (noisy proxy)
  ItemCatalog catalog;
  std::vector<EngagementEvent> events;  // time-ordered; every event is an exposure

  bool operator==(const World& other) const;
};

// Deterministic per seed. Every exposure opportunity emits exactly one
// event: like/long_view when the engagement draw succeeds, view/skip
// otherwise. A (user, item) pair is exposed at most once.
World gen_world(const WorldConfig& config);

// train = all events before split_time; test = positive events at/after
// split_time whose item age at engagement is within the cold window.
std::pair<std::vector<EngagementEvent>, std::vector<EngagementEvent>> split(
    const World& world, Timestamp split_time);

// Feed events with at < until into the impression log (every exposure
// counts as shown) and, for positive signals, the live buffer.
void replay(const World& world, Timestamp until, EngagementBuffer& buffer,
            ImpressionLog& log);

// World directory: edges.txt, items.jsonl, events.jsonl, content.txt,
// user_latents.txt, item_latents.txt, world.json manifest.
void save_world(const World& world, const std::string& dir);
World load_world(const std::string& dir);

}  // namespace socripple
