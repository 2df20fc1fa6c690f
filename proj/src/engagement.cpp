#include "socripple/engagement.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include <json.hpp>

namespace socripple {

EngagementBuffer::EngagementBuffer(const EngagementBuffer& other)
    : window_(other.window_), max_item_age_(other.max_item_age_) {
  std::shared_lock lock(other.mu_);
  entries_ = other.entries_;
  created_at_ = other.created_at_;
}

void EngagementBuffer::record(const EngagementEvent& event,
                              Timestamp item_created_at) {
  if (!is_positive(event.signal)) {
    throw std::invalid_argument(
        std::string("buffer accepts positive signals only, got ") +
        to_string(event.signal));
  }
  if (event.at < item_created_at) {
    throw std::invalid_argument("engagement precedes item creation");
  }
  std::unique_lock lock(mu_);
  entries_[event.user].emplace(event.at, event.item);
  created_at_.emplace(event.item, item_created_at);
}

std::vector<std::pair<ItemId, Timestamp>> EngagementBuffer::recent_items(
    UserId user, Timestamp now) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(user);
  if (it == entries_.end()) return {};
  std::vector<std::pair<ItemId, Timestamp>> out;
  for (const auto& [at, item] : it->second) {
    Duration age = now - at;
    if (age < 0 || age > window_) continue;
    Duration item_age = now - created_at_.at(item);
    if (item_age < 0 || item_age > max_item_age_) continue;
    out.emplace_back(item, at);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

std::size_t EngagementBuffer::prune(Timestamp now) {
  std::unique_lock lock(mu_);
  std::size_t evicted = 0;
  for (auto it = entries_.begin(); it != entries_.end();) {
    auto& set = it->second;
    for (auto e = set.begin(); e != set.end();) {
      // Ages only grow, so anything past a gate now stays past it.
      bool stale = now - e->first > window_ ||
                   now - created_at_.at(e->second) > max_item_age_;
      if (stale) {
        e = set.erase(e);
        ++evicted;
      } else {
        ++e;
      }
    }
    it = set.empty() ? entries_.erase(it) : std::next(it);
  }
  return evicted;
}

std::size_t EngagementBuffer::size() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [user, set] : entries_) n += set.size();
  return n;
}

std::vector<std::tuple<UserId, ItemId, Timestamp>>
EngagementBuffer::entries_snapshot() const {
  std::shared_lock lock(mu_);
  std::vector<std::tuple<UserId, ItemId, Timestamp>> out;
  for (const auto& [user, set] : entries_) {
    for (const auto& [at, item] : set) out.emplace_back(user, item, at);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Timestamp EngagementBuffer::created_at_of(ItemId item) const {
  std::shared_lock lock(mu_);
  auto it = created_at_.find(item);
  if (it == created_at_.end()) {
    throw std::out_of_range("item not seen by buffer: " + std::to_string(item));
  }
  return it->second;
}

ImpressionLog::ImpressionLog(const ImpressionLog& other) {
  std::shared_lock lock(other.mu_);
  shown_ = other.shown_;
  count_ = other.count_;
}

void ImpressionLog::mark_shown(UserId user, ItemId item, Timestamp at) {
  std::unique_lock lock(mu_);
  auto [it, inserted] = shown_[user].emplace(item, at);
  if (inserted) ++count_;
}

bool ImpressionLog::was_shown(UserId user, ItemId item) const {
  std::shared_lock lock(mu_);
  auto it = shown_.find(user);
  if (it == shown_.end()) return false;
  return it->second.count(item) > 0;
}

std::size_t ImpressionLog::size() const {
  std::shared_lock lock(mu_);
  return count_;
}

std::vector<std::tuple<UserId, ItemId, Timestamp>>
ImpressionLog::entries_snapshot() const {
  std::shared_lock lock(mu_);
  std::vector<std::tuple<UserId, ItemId, Timestamp>> out;
  for (const auto& [user, items] : shown_) {
    for (const auto& [item, at] : items) out.emplace_back(user, item, at);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EngagementEvent> load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event file: " + path);
  std::vector<EngagementEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      events.push_back({j.at("user").get<UserId>(), j.at("item").get<ItemId>(),
                        j.at("ts").get<Timestamp>(),
                        signal_from_string(j.at("signal").get<std::string>())});
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return events;
}

void save_events(const std::string& path,
                 const std::vector<EngagementEvent>& events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write event file: " + path);
  for (const auto& e : events) {
    out << "{\"user\":" << e.user << ",\"item\":" << e.item
        << ",\"ts\":" << e.at << ",\"signal\":\"" << to_string(e.signal)
        << "\"}\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ItemCatalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog file: " + path);
  ItemCatalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      catalog.add({j.at("item").get<ItemId>(), j.at("creator").get<UserId>(),
                   j.at("created_ts").get<Timestamp>()});
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return catalog;
}

void save_catalog(const std::string& path, const ItemCatalog& catalog) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write catalog file: " + path);
  for (const auto& m : catalog.items()) {
    out << "{\"item\":" << m.item << ",\"creator\":" << m.creator
        << ",\"created_ts\":" << m.created_at << "}\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace socripple
