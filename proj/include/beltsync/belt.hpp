#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "beltsync/errors.hpp"

// Abstract conveyor-belt synchronization protocol: two parties continuously
// add/remove a signed signal quantity proportional to their local clock
// reading; the post-transient amount at the readout point encodes the clock
// offset. "Sand" may be negative throughout (it stands for any signed
// modulation: voltage, frequency shift, ...).
namespace beltsync::belt {

struct ClockPair {
    double t0_a = 0.0;   // Alice's clock offset vs external time (s)
    double t0_b = 0.0;   // Bob's clock offset vs external time (s)
    double rate_b = 1.0; // Bob's rate multiplier relative to Alice
    double drift_b = 0.0; // slow linear drift of Bob's rate (1/s)

    void validate() const {
        if (!(rate_b > 0.0)) throw config_error("ClockPair: rate_b must be > 0");
    }

    bool perfect() const { return rate_b == 1.0 && drift_b == 0.0; }

    double offset() const { return t0_b - t0_a; }

    // local clock readings as functions of external time
    double alice_time(double t) const { return t - t0_a; }
    double bob_time(double t) const {
        const double u = t - t0_b;
        return rate_b * u + 0.5 * drift_b * u * u;
    }
};

struct BeltScenario {
    double s = 1.0;        // sand-rate constant (amount/s^2)
    double T = 1.0;        // Alice -> Bob transit time (s)
    double T_prime = 1.0;  // Bob -> Alice' transit time (s)
    std::optional<double> belt_speed{}; // nu (m/s), for L = nu*T reporting

    BeltScenario() = default;
    BeltScenario(double s_, double T_, std::optional<double> T_prime_ = {},
                 std::optional<double> belt_speed_ = {})
        : s(s_), T(T_), T_prime(T_prime_.value_or(T_)), belt_speed(belt_speed_) {}

    void validate() const {
        if (!(s > 0.0)) throw config_error("BeltScenario: s must be > 0");
        // T = 0 is tolerated as the degenerate zero-baseline case
        if (!(T >= 0.0)) throw config_error("BeltScenario: T must be >= 0");
        if (!(T_prime >= 0.0)) throw config_error("BeltScenario: T_prime must be >= 0");
    }

    // external time after which all three contributions are active
    double transient_end(const ClockPair& clocks) const {
        return 2.0 * T + std::max(clocks.t0_a, clocks.t0_b);
    }
};

// ---------------------------------------------------------------------------
// Ramp schedules (periodic restart / reversal of the deposit ramps)

enum class RampMode { linear, restart, reverse };

// Maps a party's local clock reading to the ramp value that scales its
// deposit/removal amount. linear is the plain protocol; restart resets the
// ramp to zero every period (sawtooth); reverse alternates the ramp slope
// between +1 and -1 every half period (triangle).
struct RampSchedule {
    RampMode mode = RampMode::linear;
    double period = 0.0; // unused for linear
    double s = 1.0;      // rate constant, for slope reporting

    double value(double local_t) const {
        switch (mode) {
        case RampMode::linear: return local_t;
        case RampMode::restart: return std::fmod(local_t, period);
        case RampMode::reverse: {
            const double ph = std::fmod(local_t, period);
            const double half = 0.5 * period;
            return ph <= half ? ph : period - ph;
        }
        }
        return local_t;
    }

    // signed ramp rate at local_t: +-s for reverse, s with resets for restart
    double rate_slope(double local_t) const {
        switch (mode) {
        case RampMode::linear: return s;
        case RampMode::restart: return s;
        case RampMode::reverse: {
            const double ph = std::fmod(local_t, period);
            return ph <= 0.5 * period ? s : -s;
        }
        }
        return s;
    }

    // index of the linear segment local_t falls on
    long segment(double local_t) const {
        switch (mode) {
        case RampMode::linear: return 0;
        case RampMode::restart: return static_cast<long>(std::floor(local_t / period));
        case RampMode::reverse:
            return static_cast<long>(std::floor(local_t / (0.5 * period)));
        }
        return 0;
    }
};

inline RampSchedule periodic_ramp(double period, double s, RampMode mode) {
    if (!(period > 0.0)) throw config_error("periodic_ramp: period must be > 0");
    return RampSchedule{mode, period, s};
}

// The periodic ramps only reproduce the plain protocol when the period is
// long against both the roundtrip and the offset being measured.
inline std::optional<std::string> ramp_period_warning(const RampSchedule& sched,
                                                      const BeltScenario& sc,
                                                      const ClockPair& clocks) {
    if (sched.mode == RampMode::linear) return std::nullopt;
    const double roundtrip = sc.T + sc.T_prime;
    if (sched.period < 10.0 * roundtrip)
        return "ramp period " + std::to_string(sched.period) +
               " not large against roundtrip " + std::to_string(roundtrip);
    if (sched.period < 10.0 * std::fabs(clocks.offset()))
        return "ramp period " + std::to_string(sched.period) +
               " not large against clock offset " + std::to_string(clocks.offset());
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Readout operations

// Steady-state amount at the readout point for perfect clocks and a
// midpoint-placed Bob.
inline double steady_state_readout(const BeltScenario& sc, const ClockPair& clocks) {
    sc.validate();
    clocks.validate();
    if (!clocks.perfect())
        throw config_error("steady_state_readout: requires rate_b = 1 and drift_b = 0; "
                           "use rate_mismatch_readout for unequal rates");
    if (sc.T_prime != sc.T)
        throw config_error("steady_state_readout: requires T_prime = T; "
                           "use differential_readout for asymmetric placement");
    return sc.s * (clocks.t0_b - clocks.t0_a);
}

// Time-resolved amount at the readout point. Each term is gated to zero
// before its party's protocol start (t0_a for Alice, t0_b for Bob, on the
// external clock).
inline double simulate_readout(const BeltScenario& sc, const ClockPair& clocks, double t,
                               const RampSchedule& sched = RampSchedule{}) {
    sc.validate();
    clocks.validate();
    if (!(t >= 0.0)) throw config_error("simulate_readout: t must be >= 0");

    double q = 0.0;
    const double xa = clocks.alice_time(t - 2.0 * sc.T);
    if (xa >= 0.0) q += 0.5 * sc.s * sched.value(xa);
    const double xb = clocks.bob_time(t - sc.T);
    if (t - sc.T >= clocks.t0_b) q -= sc.s * sched.value(xb);
    const double xa2 = clocks.alice_time(t);
    if (xa2 >= 0.0) q += 0.5 * sc.s * sched.value(xa2);
    return q;
}

// True when all three contributions at external time t sit on the same
// linear ramp segment, i.e. at least one roundtrip past the last turnaround.
inline bool plateau_ok(const RampSchedule& sched, const BeltScenario& sc,
                       const ClockPair& clocks, double t) {
    const double xa = clocks.alice_time(t - 2.0 * sc.T);
    const double xb = clocks.bob_time(t - sc.T);
    const double xa2 = clocks.alice_time(t);
    if (xa < 0.0 || xb < 0.0 || xa2 < 0.0) return false;
    const long seg = sched.segment(xa);
    return sched.segment(xb) == seg && sched.segment(xa2) == seg;
}

// Ranging variant: Alice adds at A and removes at A', Bob is inactive; the
// steady-state amount is -s*T, so the transit time (and distance, when the
// belt speed is known) can be read off.
struct RangingReport {
    double q_d = 0.0;
    double transit_time = 0.0;
    std::optional<double> distance{};
};

inline RangingReport ranging_readout(const BeltScenario& sc) {
    sc.validate();
    RangingReport r;
    r.q_d = -(sc.s * sc.T);
    r.transit_time = -r.q_d / sc.s;
    if (sc.belt_speed) r.distance = *sc.belt_speed * r.transit_time;
    return r;
}

// Time-resolved ranging amount (A-deposit minus A'-removal), for checking
// offset independence and the transient.
inline double ranging_simulate(const BeltScenario& sc, const ClockPair& clocks, double t) {
    sc.validate();
    if (!(t >= 0.0)) throw config_error("ranging_simulate: t must be >= 0");
    double q = 0.0;
    const double xa = clocks.alice_time(t - 2.0 * sc.T);
    if (xa >= 0.0) q += 0.5 * sc.s * xa;
    const double xa2 = clocks.alice_time(t);
    if (xa2 >= 0.0) q -= 0.5 * sc.s * xa2;
    return q;
}

// Differential two-belt variant: Bob need not sit at the midpoint; the sum
// of the two readouts is transit-independent.
struct DifferentialReadout {
    double q_d1 = 0.0;
    double q_d2 = 0.0;
    double sum = 0.0;
};

inline DifferentialReadout differential_readout(const BeltScenario& sc,
                                                const ClockPair& clocks) {
    sc.validate();
    clocks.validate();
    const double offset = clocks.t0_b - clocks.t0_a;
    DifferentialReadout d;
    d.q_d1 = sc.s * (offset + (sc.T_prime - sc.T));
    d.q_d2 = sc.s * (offset + (sc.T - sc.T_prime));
    d.sum = d.q_d1 + d.q_d2;
    return d;
}

// Unequal clock rates: Bob's removal behaves as if he used constant
// s' = s*rate_b, which leaves a residual time dependence in the readout.
inline double rate_mismatch_readout(const BeltScenario& sc, const ClockPair& clocks,
                                    double t) {
    sc.validate();
    clocks.validate();
    const double s_prime = sc.s * clocks.rate_b;
    return (sc.s - s_prime) * (t - sc.T) + s_prime * clocks.t0_b - sc.s * clocks.t0_a;
}

// ---------------------------------------------------------------------------
// Rate feedback (imperfect clocks)

struct FeedbackWindow {
    double t_start = 0.0; // must be past the transient
    double dt = 1.0;      // sample spacing
    int samples = 8;      // >= 2
};

struct FeedbackOptions {
    double slope_tol_rel = 1e-12; // converged when |slope| <= tol*s
    int max_iters = 64;
};

struct FeedbackResult {
    double rate_ratio = 1.0;      // recovered rate_b
    double residual_const = 0.0;  // s'*t0_b - s*t0_a from the initial fit
    double final_slope = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// readout with Alice running rate s_a instead of the scenario rate; Bob
// keeps the scenario rate through his own (possibly imperfect) clock
inline double readout_with_alice_rate(const BeltScenario& sc, const ClockPair& clocks,
                                      double s_a, double t) {
    return 0.5 * s_a * clocks.alice_time(t - 2.0 * sc.T) -
           sc.s * clocks.bob_time(t - sc.T) + 0.5 * s_a * clocks.alice_time(t);
}

// least-squares line fit q = slope*(t - T) + konst
inline std::pair<double, double> fit_line(const BeltScenario& sc, const ClockPair& clocks,
                                          double s_a, const FeedbackWindow& w) {
    const int n = w.samples;
    double mean_x = 0.0, mean_q = 0.0;
    std::vector<double> xs(n), qs(n);
    for (int i = 0; i < n; ++i) {
        const double t = w.t_start + i * w.dt;
        xs[i] = t - sc.T;
        qs[i] = readout_with_alice_rate(sc, clocks, s_a, t);
        mean_x += xs[i];
        mean_q += qs[i];
    }
    mean_x /= n;
    mean_q /= n;
    double sxx = 0.0, sxq = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxq += (xs[i] - mean_x) * (qs[i] - mean_q);
    }
    const double slope = sxq / sxx;
    const double konst = mean_q - slope * mean_x;
    return {slope, konst};
}

} // namespace detail

// Nulls the t-dependence of the readout by adjusting Alice's rate: the fitted
// slope equals s_a - s', so each pass subtracts it. Exact in one pass for
// noiseless drift-free samples.
inline FeedbackResult rate_feedback(const BeltScenario& sc, const ClockPair& clocks,
                                    const FeedbackWindow& window,
                                    const FeedbackOptions& opts = FeedbackOptions{}) {
    sc.validate();
    clocks.validate();
    if (window.samples < 2)
        throw config_error("rate_feedback: need >= 2 samples per window");
    if (window.t_start < sc.transient_end(clocks))
        throw config_error("rate_feedback: window starts inside the transient");

    FeedbackResult res;
    double s_a = sc.s;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        const auto [slope, konst] = detail::fit_line(sc, clocks, s_a, window);
        res.iterations = iter + 1;
        res.final_slope = slope;
        if (iter == 0) res.residual_const = konst;
        if (std::fabs(slope) <= opts.slope_tol_rel * sc.s) {
            res.converged = true;
            break;
        }
        s_a -= slope;
    }
    res.rate_ratio = s_a / sc.s;
    return res;
}

struct TrackRecord {
    double t_start = 0.0;
    double slope_before = 0.0;
    double slope_after = 0.0;
    double alice_rate = 0.0;
};

// Repeats the feedback over consecutive windows, carrying Alice's corrected
// rate forward; for a slowly drifting Bob clock each window re-nulls the
// residual slope.
inline std::vector<TrackRecord> rate_feedback_track(const BeltScenario& sc,
                                                    const ClockPair& clocks,
                                                    FeedbackWindow window, int n_windows,
                                                    double window_gap) {
    sc.validate();
    clocks.validate();
    if (window.samples < 2)
        throw config_error("rate_feedback_track: need >= 2 samples per window");
    if (window.t_start < sc.transient_end(clocks))
        throw config_error("rate_feedback_track: window starts inside the transient");
    std::vector<TrackRecord> records;
    records.reserve(static_cast<std::size_t>(n_windows));
    double s_a = sc.s;
    for (int wi = 0; wi < n_windows; ++wi) {
        TrackRecord rec;
        rec.t_start = window.t_start;
        const auto [slope0, konst0] = detail::fit_line(sc, clocks, s_a, window);
        (void)konst0;
        rec.slope_before = slope0;
        s_a -= slope0;
        const auto [slope1, konst1] = detail::fit_line(sc, clocks, s_a, window);
        (void)konst1;
        rec.slope_after = slope1;
        rec.alice_rate = s_a;
        records.push_back(rec);
        window.t_start += window_gap;
    }
    return records;
}

// ---------------------------------------------------------------------------
// Time-resolved belt snapshot (piecewise density along the belt)

// Positions are belt_speed*(transit time) when the speed is known, otherwise
// measured in transit-time units (speed 1).
struct BeltState {
    BeltScenario scenario;
    ClockPair clocks;
    double t = 0.0;
    RampSchedule sched{};

    double speed() const { return scenario.belt_speed.value_or(1.0); }
    double pos_a() const { return 0.0; }
    double pos_b() const { return speed() * scenario.T; }
    double pos_a2() const { return speed() * (scenario.T + scenario.T_prime); }

    // sand density carried by the belt element currently at position pos
    double density_at(double pos) const {
        const double v = speed();
        double q = 0.0;
        if (pos >= pos_a()) {
            const double xa = clocks.alice_time(t - pos / v);
            if (xa >= 0.0) q += 0.5 * scenario.s * sched.value(xa);
        }
        if (pos >= pos_b()) {
            const double tb = t - (pos - pos_b()) / v;
            if (tb >= clocks.t0_b) q -= scenario.s * sched.value(clocks.bob_time(tb));
        }
        if (pos >= pos_a2()) {
            const double xa2 = clocks.alice_time(t - (pos - pos_a2()) / v);
            if (xa2 >= 0.0) q += 0.5 * scenario.s * sched.value(xa2);
        }
        return q;
    }

    double at_readout() const { return density_at(pos_a2()); }

    std::vector<std::pair<double, double>> profile(std::size_t n) const {
        std::vector<std::pair<double, double>> out;
        out.reserve(n);
        const double span = pos_a2();
        for (std::size_t i = 0; i < n; ++i) {
            const double pos = span * static_cast<double>(i) / static_cast<double>(n - 1);
            out.emplace_back(pos, density_at(pos));
        }
        return out;
    }
};

} // namespace beltsync::belt
