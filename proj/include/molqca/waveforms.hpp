#pragma once

// Piecewise-linear bias schedules Delta(t). Time is relative to protocol start.

#include <array>
#include <span>
#include <vector>

namespace molqca {

struct Segment {
    double duration = 0.0;
    double delta_start = 0.0;
    double delta_end = 0.0;

    double slope() const noexcept { return (delta_end - delta_start) / duration; }
    bool operator==(const Segment&) const = default;
};

struct BiasValue {
    double delta;
    double d_delta_dt;
};

class BiasWaveform {
public:
    BiasWaveform() = default;

    /// Throws DomainError on non-positive durations or discontinuities.
    explicit BiasWaveform(std::vector<Segment> segments);

    static BiasWaveform constant(double delta, double duration);
    static BiasWaveform ramp(double delta_start, double delta_end, double duration);

    /// Value and slope at t in [0, total_duration]; right-hand slope at segment joins.
    BiasValue eval(double t) const;

    std::span<const Segment> segments() const noexcept { return segments_; }
    double total_duration() const noexcept { return starts_.empty() ? 0.0 : starts_.back(); }
    /// Start time of segment i; segment_start(size()) is the total duration.
    double segment_start(std::size_t i) const { return starts_.at(i); }
    std::size_t size() const noexcept { return segments_.size(); }
    bool empty() const noexcept { return segments_.empty(); }

    bool operator==(const BiasWaveform&) const = default;

private:
    std::vector<Segment> segments_;
    std::vector<double> starts_;
};

/// Up-ramp delta_min -> delta_max over t_s, hold for t_hold, down-ramp over t_s.
BiasWaveform hysteresis_protocol(double delta_min, double delta_max, double t_s, double t_hold);

/// Write "1" (region I), hold at zero (II), write "0" (III), hold at zero (IV).
/// Each write is 0 -> +-amp over t_s, hold at +-amp for t_hold, back to 0 over t_s.
BiasWaveform memory_protocol(double delta_amp, double t_s, double t_hold);

/// Region boundaries [t0, tI, tII, tIII, tIV] of memory_protocol.
std::array<double, 5> memory_region_bounds(double t_s, double t_hold);

} // namespace molqca
