#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "beltsync/errors.hpp"
#include "beltsync/rng.hpp"

// Multi-pulse null search: per-pulse trial shifts, shot-noise limited photon
// count observations, two-stage null location, and the accuracy scaling
// model.
namespace beltsync::estimator {

enum class Mode { classical, quantum };

struct ScanSchedule {
    std::vector<double> trial_shifts; // strictly increasing (s)
    std::uint64_t pulses_per_shift = 1;
    std::uint64_t seed = 0;
    bool use_complement = false; // also observe the co-polarized channel
    bool noiseless = false;      // use exact means (infinite-photon limit)

    void validate() const {
        if (trial_shifts.size() < 8)
            throw config_error("ScanSchedule: need at least 8 trial shifts");
        for (std::size_t i = 1; i < trial_shifts.size(); ++i)
            if (!(trial_shifts[i] > trial_shifts[i - 1]))
                throw config_error("ScanSchedule: trial_shifts must be strictly increasing");
        if (pulses_per_shift < 1)
            throw config_error("ScanSchedule: pulses_per_shift must be >= 1");
    }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    const double step = n > 1 ? (hi - lo) / static_cast<double>(n - 1) : 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    return v;
}

// Photon-count observation for the k-th trial shift, reproducible from
// (seed, repetition, k, channel) alone.
inline std::uint64_t poisson_observation(double mean_counts, std::uint64_t seed,
                                         std::uint64_t rep, std::uint64_t k,
                                         std::uint64_t channel = 0) {
    if (!(mean_counts >= 0.0))
        throw config_error("poisson_observation: mean must be >= 0");
    auto rng = rng::Stream::derive(seed, rep, k, channel);
    return rng::poisson_count(mean_counts, rng);
}

// Coincidence observation: each pulse slot carries one bi-photon whose
// coincidence outcome is Bernoulli(p).
inline std::uint64_t binomial_observation(std::uint64_t n_pairs, double p,
                                          std::uint64_t seed, std::uint64_t rep,
                                          std::uint64_t k, std::uint64_t channel = 0) {
    if (!(p >= 0.0))
        throw config_error("binomial_observation: probability must be >= 0");
    auto rng = rng::Stream::derive(seed, rep, k, channel);
    return rng::binomial_count(n_pairs, std::min(p, 1.0), rng);
}

namespace detail {

struct GridInfo {
    double min_step = 0.0;
    double max_step = 0.0;
};

inline GridInfo grid_steps(std::span<const double> shifts) {
    GridInfo g;
    g.min_step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < shifts.size(); ++i) {
        const double d = shifts[i] - shifts[i - 1];
        if (!(d > 0.0)) throw config_error("locate_null: shifts must be strictly increasing");
        g.min_step = std::min(g.min_step, d);
        g.max_step = std::max(g.max_step, d);
    }
    return g;
}

// 3-point quadratic vertex; supports non-uniform spacing. Returns NaN when
// there is no upward curvature.
inline double parabola_vertex(double x0, double y0, double x1, double y1, double x2,
                              double y2) {
    const double a = (x1 - x0) * (y1 - y2);
    const double b = (x1 - x2) * (y1 - y0);
    const double den = a - b;
    if (!(den < 0.0)) return std::numeric_limits<double>::quiet_NaN();
    double v = x1 - 0.5 * ((x1 - x0) * a - (x1 - x2) * b) / den;
    return std::clamp(v, x0, x2);
}

// midpoint of the contiguous plateau of equal minimal values around m
inline double plateau_midpoint(std::span<const double> shifts,
                               std::span<const double> objective, std::size_t m) {
    std::size_t lo = m, hi = m;
    while (lo > 0 && objective[lo - 1] == objective[m]) --lo;
    while (hi + 1 < objective.size() && objective[hi + 1] == objective[m]) ++hi;
    return 0.5 * (shifts[lo] + shifts[hi]);
}

// Coarse stage: locate the global-null region on a smoothed statistic, then
// refine the deepest fine-objective sample with a parabolic fit.
// use_lower_envelope selects a moving-minimum pre-pass, which turns a fringe
// pattern into its lower envelope (the plain fringe mean is
// offset-independent, so smoothing alone carries no location information).
inline double locate_null_core(std::span<const double> shifts,
                               std::span<const double> fine_obj,
                               std::span<const double> coarse_obj, std::size_t window,
                               bool use_lower_envelope) {
    const std::size_t n = shifts.size();
    if (fine_obj.size() != n || coarse_obj.size() != n)
        throw config_error("locate_null: shifts/observations size mismatch");
    if (n < 8) throw config_error("locate_null: need at least 8 samples");
    const std::size_t hw = std::max<std::size_t>(1, window / 2);

    std::vector<double> env(n);
    if (use_lower_envelope) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t a = k > hw ? k - hw : 0;
            const std::size_t b = std::min(n - 1, k + hw);
            double mn = coarse_obj[a];
            for (std::size_t i = a + 1; i <= b; ++i) mn = std::min(mn, coarse_obj[i]);
            env[k] = mn;
        }
    } else {
        env.assign(coarse_obj.begin(), coarse_obj.end());
    }

    std::vector<double> smooth(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = k > hw ? k - hw : 0;
        const std::size_t b = std::min(n - 1, k + hw);
        double acc = 0.0;
        for (std::size_t i = a; i <= b; ++i) acc += env[i];
        smooth[k] = acc / static_cast<double>(b - a + 1);
    }

    std::size_t coarse = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (smooth[k] < smooth[coarse]) coarse = k;
    // a healthy null needs one full smoothing window of margin on both sides
    if (coarse < window || coarse + window >= n)
        throw numeric_error("locate_null: minimum at the trial-grid edge; the true offset "
                            "appears to lie outside the grid (extrapolation refused)");

    const std::size_t lo = coarse > window ? coarse - window : 0;
    const std::size_t hi = std::min(n - 1, coarse + window);
    std::size_t m = lo;
    for (std::size_t k = lo + 1; k <= hi; ++k)
        if (fine_obj[k] < fine_obj[m]) m = k;
    if (m == 0 || m + 1 >= n)
        throw numeric_error("locate_null: deepest sample at the trial-grid edge "
                            "(extrapolation refused)");

    // equal-count neighbors mean the valley bottom is an unresolved plateau
    if (fine_obj[m - 1] == fine_obj[m] || fine_obj[m + 1] == fine_obj[m])
        return plateau_midpoint(shifts, fine_obj, m);
    const double v = parabola_vertex(shifts[m - 1], fine_obj[m - 1], shifts[m],
                                     fine_obj[m], shifts[m + 1], fine_obj[m + 1]);
    if (std::isnan(v)) return plateau_midpoint(shifts, fine_obj, m);
    return v;
}

} // namespace detail

// Classical fringe null. The grid must sample each fringe at least four
// times, otherwise the valleys alias. An optional coarse objective (for
// example the cross-minus-complement counts, whose contrast is doubled)
// steers the envelope stage; the fine parabola always runs on the
// dark-channel counts, which carry the least shot noise at the null.
inline double locate_null_fringe(std::span<const double> shifts,
                                 std::span<const double> objective, double fringe_period,
                                 std::span<const double> coarse_objective = {}) {
    if (!(fringe_period > 0.0))
        throw config_error("locate_null_fringe: fringe_period must be > 0");
    const auto g = detail::grid_steps(shifts);
    const double required = 0.25 * fringe_period;
    if (g.max_step > required * (1.0 + 1e-12))
        throw numeric_error("locate_null_fringe: trial grid step " +
                            std::to_string(g.max_step) + " s aliases the fringes; need <= " +
                            std::to_string(required) + " s (quarter fringe period)");
    const std::size_t window = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::llround(fringe_period / g.min_step)));
    return detail::locate_null_core(shifts, objective,
                                    coarse_objective.empty() ? objective : coarse_objective,
                                    window, true);
}

// Quantum dip minimum; width_hint sets the smoothing scale.
inline double locate_null_dip(std::span<const double> shifts,
                              std::span<const double> objective, double width_hint) {
    if (!(width_hint > 0.0))
        throw config_error("locate_null_dip: width_hint must be > 0");
    const auto g = detail::grid_steps(shifts);
    const std::size_t window = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::llround(0.5 * width_hint / g.min_step)));
    return detail::locate_null_core(shifts, objective, objective, window, false);
}

// Predicted synchronization accuracy at a given measurement SNR. The scaling
// is the meaningful content; constant factors are order-unity.
inline double classical_accuracy(double v, double c, double omega0, double snr) {
    if (!(snr > 0.0)) throw config_error("accuracy model: snr must be > 0");
    return c / (v * omega0 * std::sqrt(snr));
}

inline double quantum_accuracy(double bandwidth, double snr) {
    if (!(snr > 0.0)) throw config_error("accuracy model: snr must be > 0");
    return 1.0 / (bandwidth * std::sqrt(snr));
}

struct CurvePoint {
    double primary = 0.0;    // mean J_cross per pulse, or coincidence probability
    double complement = 0.0; // mean J_par per pulse (classical only)
};

struct ExperimentSpec {
    Mode mode = Mode::classical;
    ScanSchedule schedule{};
    int repetitions = 1;
    double true_offset = 0.0;
    double fringe_period = 0.0;     // classical
    double dip_width = 0.0;         // quantum
    double photons_per_pulse = 0.0; // classical J, for the SNR report
};

struct RepetitionRecord {
    double estimate = 0.0;
    double error = 0.0;
    std::uint64_t counts_total = 0;
};

struct EstimateReport {
    Mode mode = Mode::classical;
    double estimated_offset = 0.0; // mean over repetitions
    double true_offset = 0.0;
    double rms_error = 0.0;
    double bias = 0.0;
    double snr = 0.0;
    int repetitions = 0;
    std::vector<RepetitionRecord> reps;
};

// Power signal-to-noise of the aggregated null-contrast measurement:
// (mean contrast)^2 / variance at the fringe mean. Classical contrast is
// N*J/2 with Poisson variance N*J/2; quantum contrast is n/2 with Binomial
// variance n/4.
inline double experiment_snr(const ExperimentSpec& spec) {
    const double n = static_cast<double>(spec.schedule.pulses_per_shift);
    if (spec.mode == Mode::classical) return 0.5 * n * spec.photons_per_pulse;
    return n;
}

// Monte-Carlo estimate of the offset-recovery error. curve maps an effective
// offset (truth minus trial shift) to the per-pulse means; repetitions are
// independent through counter-derived streams, so parallel evaluation would
// reproduce the sequential results bit for bit.
template <class CurveFn>
EstimateReport run_experiment(const ExperimentSpec& spec, CurveFn&& curve) {
    spec.schedule.validate();
    if (spec.repetitions < 1)
        throw config_error("run_experiment: repetitions must be >= 1");
    const auto& shifts = spec.schedule.trial_shifts;
    const std::size_t n = shifts.size();
    const std::uint64_t pulses = spec.schedule.pulses_per_shift;

    std::vector<CurvePoint> pts(n);
    for (std::size_t k = 0; k < n; ++k) {
        pts[k] = curve(spec.true_offset - shifts[k]);
        if (!(pts[k].primary >= 0.0))
            throw numeric_error("run_experiment: negative curve mean");
    }

    EstimateReport rep;
    rep.mode = spec.mode;
    rep.true_offset = spec.true_offset;
    rep.repetitions = spec.repetitions;
    rep.snr = experiment_snr(spec);
    rep.reps.reserve(static_cast<std::size_t>(spec.repetitions));

    std::vector<double> objective(n);
    std::vector<double> coarse;
    if (spec.schedule.use_complement) coarse.resize(n);
    double sum_est = 0.0, sum_sq = 0.0;
    for (int r = 0; r < spec.repetitions; ++r) {
        std::uint64_t ctotal = 0;
        for (std::size_t k = 0; k < n; ++k) {
            double cross, par = 0.0;
            if (spec.schedule.noiseless) {
                const double np = static_cast<double>(pulses);
                cross = np * pts[k].primary;
                if (spec.schedule.use_complement) par = np * pts[k].complement;
                ctotal += static_cast<std::uint64_t>(cross + par);
            } else if (spec.mode == Mode::classical) {
                cross = static_cast<double>(poisson_observation(
                    static_cast<double>(pulses) * pts[k].primary, spec.schedule.seed,
                    static_cast<std::uint64_t>(r), k, 0));
                if (spec.schedule.use_complement)
                    par = static_cast<double>(poisson_observation(
                        static_cast<double>(pulses) * pts[k].complement,
                        spec.schedule.seed, static_cast<std::uint64_t>(r), k, 1));
                ctotal += static_cast<std::uint64_t>(cross + par);
            } else {
                cross = static_cast<double>(binomial_observation(
                    pulses, pts[k].primary, spec.schedule.seed,
                    static_cast<std::uint64_t>(r), k, 0));
                ctotal += static_cast<std::uint64_t>(cross);
            }
            objective[k] = cross;
            if (spec.schedule.use_complement) coarse[k] = cross - par;
        }
        const double est =
            spec.mode == Mode::classical
                ? locate_null_fringe(shifts, objective, spec.fringe_period,
                                     spec.schedule.use_complement
                                         ? std::span<const double>(coarse)
                                         : std::span<const double>())
                : locate_null_dip(shifts, objective, spec.dip_width);
        RepetitionRecord rec;
        rec.estimate = est;
        rec.error = est - spec.true_offset;
        rec.counts_total = ctotal;
        rep.reps.push_back(rec);
        sum_est += est;
        sum_sq += rec.error * rec.error;
    }
    rep.estimated_offset = sum_est / spec.repetitions;
    rep.bias = rep.estimated_offset - spec.true_offset;
    rep.rms_error = std::sqrt(sum_sq / spec.repetitions);
    return rep;
}

} // namespace beltsync::estimator
