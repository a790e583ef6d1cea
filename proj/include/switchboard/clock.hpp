#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace switchboard {

// Source of elapsed-time measurements, in seconds.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() const = 0;
};

class SteadyClock final : public Clock {
public:
    double now() const override {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    }
};

// Virtual time that only moves when advanced. Used by the mock backend so that
// simulated latencies are observable without sleeping.
class ManualClock final : public Clock {
public:
    double now() const override { return static_cast<double>(ns_.load()) * 1e-9; }

    void advance(double seconds) {
        if (seconds > 0) ns_.fetch_add(static_cast<std::int64_t>(seconds * 1e9 + 0.5));
    }

private:
    std::atomic<std::int64_t> ns_{0};
};

const Clock& steady_clock();

} // namespace switchboard
