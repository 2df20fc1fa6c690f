#include "socripple/types.hpp"

#include <algorithm>

namespace socripple {

namespace {
const std::vector<ItemId> kNoItems;
}

void ItemCatalog::add(const ItemMeta& meta) {
  if (meta.item != items_.size()) {
    throw std::invalid_argument("catalog items must be added with dense ids");
  }
  items_.push_back(meta);
  if (by_creator_.size() <= meta.creator) by_creator_.resize(meta.creator + 1);
  by_creator_[meta.creator].push_back(meta.item);
  by_time_dirty_ = true;
}

const ItemMeta& ItemCatalog::get(ItemId item) const {
  if (!contains(item)) {
    throw std::out_of_range("unknown item id " + std::to_string(item));
  }
  return items_[item];
}

const std::vector<ItemId>& ItemCatalog::items_by_creator(UserId creator) const {
  if (creator >= by_creator_.size()) return kNoItems;
  return by_creator_[creator];
}

const std::vector<ItemId>& ItemCatalog::by_creation_time() const {
  if (by_time_dirty_) {
    by_time_.resize(items_.size());
    for (ItemId i = 0; i < items_.size(); ++i) by_time_[i] = i;
    std::sort(by_time_.begin(), by_time_.end(), [this](ItemId a, ItemId b) {
      if (items_[a].created_at != items_[b].created_at) {
        return items_[a].created_at < items_[b].created_at;
      }
      return a < b;
    });
    by_time_dirty_ = false;
  }
  return by_time_;
}

std::vector<ItemId> ItemCatalog::items_in_age_window(Timestamp now,
                                                     Duration max_age) const {
  const auto& order = by_creation_time();
  auto lo = std::partition_point(order.begin(), order.end(), [&](ItemId i) {
    return items_[i].created_at < now - max_age;
  });
  std::vector<ItemId> out;
  for (auto it = lo; it != order.end(); ++it) {
    if (items_[*it].created_at > now) break;
    out.push_back(*it);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace socripple
