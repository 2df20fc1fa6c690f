#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace socripple {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

// Seconds since epoch (simulated worlds start at 0).
using Timestamp = std::int64_t;
using Duration = std::int64_t;

constexpr Duration kHour = 3600;
constexpr Duration kDay = 24 * kHour;

enum class Signal : std::uint8_t { kLike, kLongView, kView, kSkip };

inline const char* to_string(Signal s) {
  switch (s) {
    case Signal::kLike: return "like";
    case Signal::kLongView: return "long_view";
    case Signal::kView: return "view";
    case Signal::kSkip: return "skip";
  }
  return "?";
}

inline Signal signal_from_string(const std::string& s) {
  if (s == "like") return Signal::kLike;
  if (s == "long_view") return Signal::kLongView;
  if (s == "view") return Signal::kView;
  if (s == "skip") return Signal::kSkip;
  throw std::invalid_argument("unknown signal: " + s);
}

// Default positive set; views/skips are exposure-only.
inline bool is_positive(Signal s) {
  return s == Signal::kLike || s == Signal::kLongView;
}

struct EngagementEvent {
  UserId user = 0;
  ItemId item = 0;
  Timestamp at = 0;
  Signal signal = Signal::kView;

  bool operator==(const EngagementEvent&) const = default;
};

struct ItemMeta {
  ItemId item = 0;
  UserId creator = 0;
  Timestamp created_at = 0;

  bool operator==(const ItemMeta&) const = default;
};

// Dense item catalog: item ids are 0..size-1.
class ItemCatalog {
 public:
  ItemCatalog() = default;

  void add(const ItemMeta& meta);
  bool contains(ItemId item) const { return item < items_.size(); }
  const ItemMeta& get(ItemId item) const;
  std::size_t size() const { return items_.size(); }

  const std::vector<ItemMeta>& items() const { return items_; }
  const std::vector<ItemId>& items_by_creator(UserId creator) const;

  // Item ids sorted by (created_at, item); used for time-range scans.
  const std::vector<ItemId>& by_creation_time() const;

  // Items with 0 <= now - created_at <= max_age, ascending id.
  std::vector<ItemId> items_in_age_window(Timestamp now, Duration max_age) const;

 private:
  std::vector<ItemMeta> items_;
  mutable std::vector<std::vector<ItemId>> by_creator_;
  mutable std::vector<ItemId> by_time_;
  mutable bool by_time_dirty_ = false;
};

}  // namespace socripple
