#include "flowfill/debug_bus.hpp"

#include <algorithm>

namespace flowfill {

Value debug_event_to_tree(const DebugEvent& e) {
    return Object{{"seq", static_cast<std::int64_t>(e.seq)},
                  {"node_id", e.node_id},
                  {"msg_id", e.msg_id},
                  {"level", level_name(e.level)},
                  {"body", e.body},
                  {"timestamp", e.timestamp},
                  {"manual", e.manual}};
}

std::optional<DebugEvent> DebugBus::Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    DebugEvent e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

bool DebugBus::Subscription::closed() const {
    std::lock_guard lock(mu_);
    return closed_ && queue_.empty();
}

void DebugBus::Subscription::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

void DebugBus::Subscription::offer(const DebugEvent& e) {
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        if (queue_.size() >= capacity_) {
            // Too slow; cut it loose.
            closed_ = true;
            queue_.clear();
        } else {
            queue_.push_back(e);
        }
    }
    cv_.notify_all();
}

std::shared_ptr<DebugBus::Subscription> DebugBus::subscribe(std::size_t capacity) {
    auto sub = std::make_shared<Subscription>(capacity);
    std::lock_guard lock(mu_);
    subs_.push_back(sub);
    return sub;
}

void DebugBus::publish(const DebugEvent& e) {
    std::vector<std::shared_ptr<Subscription>> live;
    {
        std::lock_guard lock(mu_);
        std::erase_if(subs_, [](const auto& w) { return w.expired(); });
        for (const auto& w : subs_) {
            if (auto s = w.lock()) live.push_back(std::move(s));
        }
    }
    for (const auto& s : live) s->offer(e);
}

void DebugBus::close_all() {
    std::vector<std::shared_ptr<Subscription>> live;
    {
        std::lock_guard lock(mu_);
        for (const auto& w : subs_) {
            if (auto s = w.lock()) live.push_back(std::move(s));
        }
        subs_.clear();
    }
    for (const auto& s : live) s->close();
}

std::size_t DebugBus::subscriber_count() {
    std::lock_guard lock(mu_);
    std::erase_if(subs_, [](const auto& w) { return w.expired(); });
    return subs_.size();
}

}  // namespace flowfill
