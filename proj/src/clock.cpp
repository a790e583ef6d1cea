#include "switchboard/clock.hpp"

namespace switchboard {

const Clock& steady_clock() {
    static const SteadyClock clock;
    return clock;
}

} // namespace switchboard
