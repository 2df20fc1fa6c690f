#pragma once

#include <map>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "socripple/types.hpp"

namespace socripple {

// Live buffer of recent positive engagements on cold items. Two gates
// apply at query time, both closed at the boundary:
//   engagement recency: 0 <= now - at <= window
//   item age:           0 <= now - created_at <= max_item_age
// Thread-safe: concurrent record/recent_items/prune are allowed.
class EngagementBuffer {
 public:
  explicit EngagementBuffer(Duration window = kDay, Duration max_item_age = kDay)
      : window_(window), max_item_age_(max_item_age) {}

  EngagementBuffer(const EngagementBuffer& other);
  EngagementBuffer& operator=(const EngagementBuffer&) = delete;

  // Only positive signals may be recorded; event.at must not precede
  // the item's creation time.
  void record(const EngagementEvent& event, Timestamp item_created_at);

  // Entries passing both gates at `now`, most recent first
  // (at descending, item ascending). Unknown users yield {}.
  std::vector<std::pair<ItemId, Timestamp>> recent_items(UserId user,
                                                         Timestamp now) const;

  // Evict entries that can never pass the gates at any time >= now.
  // Returns the number evicted.
  std::size_t prune(Timestamp now);

  std::size_t size() const;
  Duration window() const { return window_; }
  Duration max_item_age() const { return max_item_age_; }

  // Stable snapshot of all entries as (user, item, at) sorted ascending.
  std::vector<std::tuple<UserId, ItemId, Timestamp>> entries_snapshot() const;
  Timestamp created_at_of(ItemId item) const;

 private:
  Duration window_;
  Duration max_item_age_;
  mutable std::shared_mutex mu_;
  // Per user, (at, item) ordered ascending. Exact duplicates collapse.
  std::unordered_map<UserId, std::set<std::pair<Timestamp, ItemId>>> entries_;
  std::unordered_map<ItemId, Timestamp> created_at_;
};

// First-shown timestamps per (user, item). Append-only within a run.
class ImpressionLog {
 public:
  ImpressionLog() = default;
  ImpressionLog(const ImpressionLog& other);
  ImpressionLog& operator=(const ImpressionLog&) = delete;

  void mark_shown(UserId user, ItemId item, Timestamp at);
  bool was_shown(UserId user, ItemId item) const;
  std::size_t size() const;

  std::vector<std::tuple<UserId, ItemId, Timestamp>> entries_snapshot() const;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<UserId, std::unordered_map<ItemId, Timestamp>> shown_;
  std::size_t count_ = 0;
};

// Event file: one JSON object per line, fields user/item/ts/signal.
std::vector<EngagementEvent> load_events(const std::string& path);
void save_events(const std::string& path,
                 const std::vector<EngagementEvent>& events);

// Item catalog file: one JSON object per line, fields item/creator/created_ts.
ItemCatalog load_catalog(const std::string& path);
void save_catalog(const std::string& path, const ItemCatalog& catalog);

}  // namespace socripple
