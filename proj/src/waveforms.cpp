#include "molqca/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "molqca/errors.hpp"

namespace molqca {

BiasWaveform::BiasWaveform(std::vector<Segment> segments) : segments_(std::move(segments)) {
    starts_.reserve(segments_.size() + 1);
    starts_.push_back(0.0);
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const Segment& s = segments_[i];
        if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
            throw DomainError("segment " + std::to_string(i) + " has non-positive duration");
        }
        if (!std::isfinite(s.delta_start) || !std::isfinite(s.delta_end)) {
            throw DomainError("segment " + std::to_string(i) + " has non-finite bias");
        }
        if (i > 0 && segments_[i - 1].delta_end != s.delta_start) {
            throw DomainError("bias is discontinuous at segment " + std::to_string(i));
        }
        starts_.push_back(starts_.back() + s.duration);
    }
}

BiasWaveform BiasWaveform::constant(double delta, double duration) {
    return BiasWaveform({{duration, delta, delta}});
}

BiasWaveform BiasWaveform::ramp(double delta_start, double delta_end, double duration) {
    return BiasWaveform({{duration, delta_start, delta_end}});
}

BiasValue BiasWaveform::eval(double t) const {
    if (segments_.empty() || !(t >= 0.0 && t <= total_duration())) {
        throw DomainError("time " + std::to_string(t) + " outside waveform domain");
    }
    // First segment whose start is > t, minus one; the final instant belongs to the last segment.
    auto it = std::upper_bound(starts_.begin(), starts_.end() - 1, t);
    std::size_t i = static_cast<std::size_t>(it - starts_.begin()) - 1;
    i = std::min(i, segments_.size() - 1);
    const Segment& s = segments_[i];
    const double slope = s.slope();
    if (t == starts_[i + 1]) {
        return {s.delta_end, slope};
    }
    return {s.delta_start + slope * (t - starts_[i]), slope};
}

namespace {

void push_ramp(std::vector<Segment>& out, double from, double to, double duration) {
    out.push_back({duration, from, to});
}

void push_hold(std::vector<Segment>& out, double at, double duration) {
    if (duration > 0.0) {
        out.push_back({duration, at, at});
    }
}

void require_times(double t_s, double t_hold) {
    if (!(t_s > 0.0) || !std::isfinite(t_s)) {
        throw DomainError("switching time must be finite and > 0");
    }
    if (!(t_hold >= 0.0) || !std::isfinite(t_hold)) {
        throw DomainError("hold time must be finite and >= 0");
    }
}

} // namespace

BiasWaveform hysteresis_protocol(double delta_min, double delta_max, double t_s, double t_hold) {
    require_times(t_s, t_hold);
    std::vector<Segment> segs;
    push_ramp(segs, delta_min, delta_max, t_s);
    push_hold(segs, delta_max, t_hold);
    push_ramp(segs, delta_max, delta_min, t_s);
    return BiasWaveform(std::move(segs));
}

BiasWaveform memory_protocol(double delta_amp, double t_s, double t_hold) {
    require_times(t_s, t_hold);
    if (!(delta_amp >= 0.0)) {
        throw DomainError("memory amplitude must be >= 0");
    }
    std::vector<Segment> segs;
    for (double sign : {+1.0, -1.0}) {
        const double peak = sign * delta_amp;
        push_ramp(segs, 0.0, peak, t_s);
        push_hold(segs, peak, t_hold);
        push_ramp(segs, peak, 0.0, t_s);
        push_hold(segs, 0.0, t_hold);
    }
    return BiasWaveform(std::move(segs));
}

std::array<double, 5> memory_region_bounds(double t_s, double t_hold) {
    const double write = 2.0 * t_s + t_hold;
    return {0.0, write, write + t_hold, 2.0 * write + t_hold, 2.0 * write + 2.0 * t_hold};
}

} // namespace molqca
