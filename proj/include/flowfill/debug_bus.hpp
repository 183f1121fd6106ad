#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "flowfill/nodes.hpp"
#include "flowfill/value.hpp"

namespace flowfill {

struct DebugEvent {
    std::uint64_t seq = 0;
    std::string node_id;
    std::string msg_id;
    Level level = Level::info;
    Value body;
    std::int64_t timestamp = 0;  // wall clock, ms since epoch
    bool manual = false;         // produced by an injected execution
};

Value debug_event_to_tree(const DebugEvent& e);

// Multi-consumer broadcast. A consumer whose queue fills up is disconnected
// instead of slowing down publishers.
class DebugBus {
public:
    class Subscription {
    public:
        explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

        // nullopt on timeout or once closed.
        std::optional<DebugEvent> next(std::chrono::milliseconds timeout);
        bool closed() const;
        void close();

    private:
        friend class DebugBus;
        void offer(const DebugEvent& e);

        mutable std::mutex mu_;
        std::condition_variable cv_;
        std::deque<DebugEvent> queue_;
        std::size_t capacity_;
        bool closed_ = false;
    };

    std::shared_ptr<Subscription> subscribe(std::size_t capacity = 4096);
    void publish(const DebugEvent& e);
    void close_all();
    std::size_t subscriber_count();

private:
    std::mutex mu_;
    std::vector<std::weak_ptr<Subscription>> subs_;
};

}  // namespace flowfill
