#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "beltsync/biphoton.hpp"
#include "beltsync/estimator.hpp"
#include "beltsync/optics.hpp"
#include "support/test_support.hpp"

using namespace beltsync;
using namespace beltsync::estimator;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kC = 299792458.0;

// closed-form curves stand in for the optics engines: fast and independently
// validated against them in the optics/biphoton suites
struct ClassicalCurve {
    double J = 40.0;
    double omega0 = 1e14;
    double dw = 1e13;
    double voc = 1.25e-6; // 8 v omega0 / c = 1e9

    double period() const { return 2.0 * std::numbers::pi / (8.0 * voc * omega0); }
    double envelope() const { return 1.0 / (4.0 * voc * dw); }
    CurvePoint operator()(double dt) const {
        const double jc = ts::fringe_closed_form(J, omega0, dw, voc * kC, kC, dt);
        return CurvePoint{jc, J - jc};
    }
};

struct QuantumCurve {
    double sigma = 1e13;
    double voc = 1.25e-6;

    double width() const { return 1.0 / (4.0 * voc * sigma); }
    CurvePoint operator()(double dt) const {
        return CurvePoint{ts::dip_closed_form(sigma, voc * kC, kC, dt), 0.0};
    }
};

} // namespace

TEST_CASE("shot-noise observations") {
    SECTION("zero mean always yields zero counts") {
        for (std::uint64_t k = 0; k < 20; ++k)
            CHECK(poisson_observation(0.0, 42, 0, k) == 0);
    }

    SECTION("identical indices reproduce identical counts") {
        for (std::uint64_t k = 0; k < 30; ++k) {
            CHECK(poisson_observation(123.4, 7, 3, k) == poisson_observation(123.4, 7, 3, k));
            CHECK(binomial_observation(1000, 0.3, 7, 3, k) ==
                  binomial_observation(1000, 0.3, 7, 3, k));
        }
    }

    SECTION("distinct indices draw independent streams") {
        int differing = 0;
        for (std::uint64_t k = 0; k < 50; ++k)
            if (poisson_observation(100.0, 7, 0, k) != poisson_observation(100.0, 7, 1, k))
                ++differing;
        CHECK(differing > 25);
    }

    SECTION("Poisson sample mean at 4 sigma for a large mean") {
        const double mean = 1e6;
        const int n = 1000;
        double acc = 0.0;
        for (int k = 0; k < n; ++k)
            acc += static_cast<double>(
                poisson_observation(mean, 99, 0, static_cast<std::uint64_t>(k)));
        const double sample_mean = acc / n;
        CHECK(std::fabs(sample_mean - mean) <= 4.0 * std::sqrt(mean / n));
    }

    SECTION("Poisson variance is near the mean") {
        const double mean = 400.0;
        const int n = 2000;
        double acc = 0.0, acc2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const double x = static_cast<double>(
                poisson_observation(mean, 5, 0, static_cast<std::uint64_t>(k)));
            acc += x;
            acc2 += x * x;
        }
        const double m = acc / n;
        const double var = acc2 / n - m * m;
        CHECK_THAT(var, WithinRel(mean, 0.15));
    }

    SECTION("Binomial sample mean at 4 sigma") {
        const std::uint64_t trials = 1000000;
        const double p = 0.3;
        const int n = 400;
        double acc = 0.0;
        for (int k = 0; k < n; ++k)
            acc += static_cast<double>(
                binomial_observation(trials, p, 11, 0, static_cast<std::uint64_t>(k)));
        const double mean = static_cast<double>(trials) * p;
        const double sigma = std::sqrt(static_cast<double>(trials) * p * (1.0 - p));
        CHECK(std::fabs(acc / n - mean) <= 4.0 * sigma / std::sqrt(double(n)));
    }

    SECTION("small-count binomial paths are exact and bounded") {
        for (std::uint64_t k = 0; k < 200; ++k) {
            const auto c = binomial_observation(40, 0.05, 13, 0, k);
            CHECK(c <= 40);
        }
        CHECK(binomial_observation(1000, 0.0, 1, 0, 0) == 0);
        CHECK(binomial_observation(1000, 1.0, 1, 0, 0) == 1000);
    }

    SECTION("negative means are rejected") {
        CHECK_THROWS_AS(poisson_observation(-1.0, 0, 0, 0), config_error);
        CHECK_THROWS_AS(binomial_observation(10, -0.1, 0, 0, 0), config_error);
    }
}

TEST_CASE("null location on noiseless curves") {
    SECTION("classical fringe to 1e-12 s") {
        const ClassicalCurve curve;
        const double step = curve.period() / 40.0;
        const double truth = 0.37 * step; // deliberately off-grid
        std::vector<double> shifts, obj;
        const int half = 1536;
        for (int i = -half; i <= half; ++i) {
            shifts.push_back(step * i);
            obj.push_back(curve(truth - shifts.back()).primary);
        }
        const double est = locate_null_fringe(shifts, obj, curve.period());
        CHECK_THAT(est, WithinAbs(truth, 1e-12));
    }

    SECTION("quantum dip to 1e-3 dip widths") {
        const QuantumCurve curve;
        const double step = curve.width() / 15.0;
        const double truth = 0.43 * step;
        std::vector<double> shifts, obj;
        for (int i = -45; i <= 45; ++i) {
            shifts.push_back(step * i);
            obj.push_back(curve(truth - shifts.back()).primary);
        }
        const double est = locate_null_dip(shifts, obj, curve.width());
        CHECK_THAT(est, WithinAbs(truth, 1e-3 * curve.width()));
    }

    SECTION("zero offset is recovered as zero") {
        const QuantumCurve curve;
        const double step = curve.width() / 15.0;
        std::vector<double> shifts, obj;
        for (int i = -45; i <= 45; ++i) {
            shifts.push_back(step * i);
            obj.push_back(curve(-shifts.back()).primary);
        }
        CHECK_THAT(locate_null_dip(shifts, obj, curve.width()),
                   WithinAbs(0.0, 1e-4 * curve.width()));
    }
}

TEST_CASE("null location error paths") {
    const ClassicalCurve curve;

    SECTION("aliased trial grids are refused with the required step") {
        const double step = 0.3 * curve.period(); // above the quarter-period limit
        std::vector<double> shifts, obj;
        for (int i = -20; i <= 20; ++i) {
            shifts.push_back(step * i);
            obj.push_back(curve(-shifts.back()).primary);
        }
        CHECK_THROWS_AS(locate_null_fringe(shifts, obj, curve.period()), numeric_error);
        CHECK_THROWS_WITH(locate_null_fringe(shifts, obj, curve.period()),
                          ContainsSubstring("alias"));
    }

    SECTION("true offset outside the grid refuses to extrapolate") {
        const double step = curve.period() / 4.0;
        std::vector<double> shifts, obj;
        for (int i = -60; i <= 60; ++i) shifts.push_back(step * i);
        const double truth = shifts.back() + 0.5 * curve.envelope(); // past the end
        for (const double sh : shifts) obj.push_back(curve(truth - sh).primary);
        CHECK_THROWS_AS(locate_null_fringe(shifts, obj, curve.period()), numeric_error);
        CHECK_THROWS_WITH(locate_null_fringe(shifts, obj, curve.period()),
                          ContainsSubstring("extrapolation"));
    }

    SECTION("flat plateaus fall back to the plateau midpoint") {
        std::vector<double> shifts, obj;
        for (int i = 0; i <= 100; ++i) {
            shifts.push_back(1e-9 * i);
            obj.push_back(std::max(std::fabs(double(i) - 50.0) - 2.0, 0.0));
        }
        CHECK_THAT(locate_null_dip(shifts, obj, 2e-8), WithinRel(50e-9, 1e-12));
    }
}

TEST_CASE("accuracy model") {
    SECTION("classical scaling substitution") {
        // c/v = 1e6, omega0 = 1e15, snr = 100
        CHECK_THAT(classical_accuracy(1e-6 * kC, kC, 1e15, 100.0), WithinRel(1e-10, 1e-12));
    }
    SECTION("quantum scaling substitution") {
        CHECK_THAT(quantum_accuracy(1e13, 100.0), WithinRel(1e-14, 1e-12));
    }
    SECTION("classical beats quantum exactly when v/c exceeds dw/omega0") {
        auto rng = rng::Stream::derive(53);
        for (int i = 0; i < 200; ++i) {
            const double voc = ts::uniform(rng, 1e-8, 1e-3);
            const double omega0 = ts::uniform(rng, 1e14, 2e15);
            const double dw = ts::uniform(rng, 1e10, 1e13);
            const double snr = ts::uniform(rng, 1.0, 1e6);
            const bool classical_wins = classical_accuracy(voc * kC, kC, omega0, snr) <
                                        quantum_accuracy(dw, snr);
            CHECK(classical_wins == (voc > dw / omega0));
        }
    }
    SECTION("rejects non-positive snr") {
        CHECK_THROWS_AS(classical_accuracy(1.0, kC, 1e15, 0.0), config_error);
        CHECK_THROWS_AS(quantum_accuracy(1e13, -1.0), config_error);
    }
}

namespace {

ExperimentSpec classical_spec(const ClassicalCurve& curve, double truth,
                              std::uint64_t pulses, int reps, std::uint64_t seed) {
    ExperimentSpec spec;
    spec.mode = Mode::classical;
    spec.schedule.trial_shifts = linspace(truth - 2.5 * curve.envelope(),
                                          truth + 2.1 * curve.envelope(), 401);
    spec.schedule.pulses_per_shift = pulses;
    spec.schedule.seed = seed;
    spec.repetitions = reps;
    spec.true_offset = truth;
    spec.fringe_period = curve.period();
    spec.photons_per_pulse = curve.J;
    return spec;
}

ExperimentSpec quantum_spec(const QuantumCurve& curve, double truth, std::uint64_t pairs,
                            int reps, std::uint64_t seed) {
    ExperimentSpec spec;
    spec.mode = Mode::quantum;
    spec.schedule.trial_shifts =
        linspace(truth - 3.2 * curve.width(), truth + 2.8 * curve.width(), 121);
    spec.schedule.pulses_per_shift = pairs;
    spec.schedule.seed = seed;
    spec.repetitions = reps;
    spec.true_offset = truth;
    spec.dip_width = curve.width();
    return spec;
}

} // namespace

TEST_CASE("experiment runs") {
    const ClassicalCurve curve;
    const double truth = 3.7e-9;

    SECTION("noiseless limit recovers the offset to the fine-stage floor") {
        auto spec = classical_spec(curve, truth, 1000, 1, 1);
        spec.schedule.noiseless = true;
        const auto rep = run_experiment(spec, curve);
        CHECK(rep.rms_error < 1e-11);
    }

    SECTION("identical seeds reproduce the full report") {
        const auto a = run_experiment(classical_spec(curve, truth, 200, 8, 77), curve);
        const auto b = run_experiment(classical_spec(curve, truth, 200, 8, 77), curve);
        REQUIRE(a.reps.size() == b.reps.size());
        for (std::size_t i = 0; i < a.reps.size(); ++i) {
            CHECK(a.reps[i].estimate == b.reps[i].estimate);
            CHECK(a.reps[i].counts_total == b.reps[i].counts_total);
        }
        CHECK(a.rms_error == b.rms_error);
    }

    SECTION("different seeds decorrelate") {
        const auto a = run_experiment(classical_spec(curve, truth, 200, 8, 77), curve);
        const auto b = run_experiment(classical_spec(curve, truth, 200, 8, 78), curve);
        CHECK(a.rms_error != b.rms_error);
    }

    SECTION("quadrupling the photon number roughly halves the error") {
        const auto lo = run_experiment(classical_spec(curve, truth, 50, 20, 5), curve);
        const auto hi = run_experiment(classical_spec(curve, truth, 200, 20, 5), curve);
        const double ratio = lo.rms_error / hi.rms_error;
        CHECK(ratio > 2.0 / 1.5);
        CHECK(ratio < 2.0 * 1.5);
        CHECK(hi.snr == 4.0 * lo.snr);
    }

    SECTION("the complementary detector never hurts and doubles the counts") {
        auto base = classical_spec(curve, truth, 100, 24, 9);
        auto both = base;
        both.schedule.use_complement = true;
        const auto a = run_experiment(base, curve);
        const auto b = run_experiment(both, curve);
        // the complement only steers the coarse stage; at this SNR the fine
        // stage dominates, so the errors stay comparable
        CHECK(b.rms_error < 1.3 * a.rms_error);
        CHECK(b.reps.front().counts_total > 1.8 * a.reps.front().counts_total);
    }

    SECTION("bias stays below the Monte-Carlo resolution") {
        const auto rep = run_experiment(classical_spec(curve, truth, 400, 32, 21), curve);
        CHECK(std::fabs(rep.bias) <=
              3.0 * rep.rms_error / std::sqrt(double(rep.repetitions)));
    }
}

TEST_CASE("experiment grid-shift equivariance") {
    // dyadic shifts and offsets keep (truth+C)-(shift+C) bit-exact, so the
    // derived counts and the per-repetition errors must match exactly
    const QuantumCurve curve;
    const double step = std::ldexp(1.0, -30);
    const double truth = 5.0 * step;
    const double shift_c = std::ldexp(3.0, -28);

    auto make = [&](double offset_shift) {
        ExperimentSpec spec;
        spec.mode = Mode::quantum;
        for (int i = -64; i <= 64; ++i)
            spec.schedule.trial_shifts.push_back(offset_shift + step * i);
        spec.schedule.pulses_per_shift = 400;
        spec.schedule.seed = 31;
        spec.repetitions = 6;
        spec.true_offset = truth + offset_shift;
        spec.dip_width = curve.width();
        return spec;
    };

    const auto a = run_experiment(make(0.0), curve);
    const auto b = run_experiment(make(shift_c), curve);
    REQUIRE(a.reps.size() == b.reps.size());
    for (std::size_t i = 0; i < a.reps.size(); ++i) {
        // identical draws; the vertex re-rounds at the translated magnitude
        CHECK(a.reps[i].counts_total == b.reps[i].counts_total);
        CHECK(std::fabs(a.reps[i].error - b.reps[i].error) < 1e-20);
    }
    CHECK(std::fabs(a.rms_error - b.rms_error) < 1e-20);
}

TEST_CASE("quantum runs and error scaling") {
    const QuantumCurve curve;
    const double truth = 2.3e-9;

    SECTION("noiseless dip run") {
        auto spec = quantum_spec(curve, truth, 1000, 1, 1);
        spec.schedule.noiseless = true;
        const auto rep = run_experiment(spec, curve);
        CHECK(rep.rms_error < 1e-3 * curve.width());
    }

    SECTION("snr equals the pair count") {
        const auto rep = run_experiment(quantum_spec(curve, truth, 500, 2, 3), curve);
        CHECK(rep.snr == 500.0);
    }

    SECTION("two-decade scaling slope near -1/2 for both modes") {
        auto slope_of = [](const std::vector<double>& snr, const std::vector<double>& rms) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const double n = static_cast<double>(snr.size());
            for (std::size_t i = 0; i < snr.size(); ++i) {
                const double x = std::log10(snr[i]);
                const double y = std::log10(rms[i]);
                sx += x; sy += y; sxx += x * x; sxy += x * y;
            }
            return (n * sxy - sx * sy) / (n * sxx - sx * sx);
        };

        std::vector<double> qs, qr;
        for (std::uint64_t pairs : {400u, 1265u, 4000u, 12649u, 40000u}) {
            const auto rep = run_experiment(quantum_spec(curve, truth, pairs, 16, 57), curve);
            qs.push_back(rep.snr);
            qr.push_back(rep.rms_error);
        }
        const double q_slope = slope_of(qs, qr);
        CHECK(q_slope > -0.7);
        CHECK(q_slope < -0.3);

        const ClassicalCurve ccurve;
        std::vector<double> cs, cr;
        for (std::uint64_t pulses : {50u, 158u, 500u, 1581u, 5000u}) {
            const auto rep =
                run_experiment(classical_spec(ccurve, 3.7e-9, pulses, 16, 57), ccurve);
            cs.push_back(rep.snr);
            cr.push_back(rep.rms_error);
        }
        const double c_slope = slope_of(cs, cr);
        CHECK(c_slope > -0.7);
        CHECK(c_slope < -0.3);
    }
}

TEST_CASE("even-order dispersion leaves the quantum experiment unchanged") {
    // engine-backed curves: the even-order residual cancels identically, so
    // the paired Monte-Carlo runs draw the same counts and the errors match
    const double kC2 = 299792458.0;
    const double omega0 = 1e15, sigma = 1e13, voc = 1.25e-6;
    const biphoton::BiphotonState state = biphoton::BiphotonState::gaussian(omega0, sigma, 1e-10);
    const optics::DelayDrive drive(voc * kC2, kC2, 10.0);
    const std::vector<optics::cplx> quad{{0.0, 0.0}, {0.0, 0.0}, {1.0 / (sigma * sigma), 0.0}};
    const optics::DispersionProfile even(omega0, quad, {}, {}, {});
    const biphoton::DipEngine<optics::DelayDrive> eng_disp(state, drive, even);
    const biphoton::DipEngine<optics::DelayDrive> eng_plain(
        state, drive, optics::DispersionProfile::none(omega0));

    const double width = biphoton::dip_width(state, drive);
    ExperimentSpec spec;
    spec.mode = Mode::quantum;
    spec.schedule.trial_shifts = linspace(2.3e-9 - 3.2 * width, 2.3e-9 + 2.8 * width, 121);
    spec.schedule.pulses_per_shift = 2000;
    spec.schedule.seed = 14;
    spec.repetitions = 12;
    spec.true_offset = 2.3e-9;
    spec.dip_width = width;

    const auto a = run_experiment(
        spec, [&](double dt) { return CurvePoint{eng_plain.probability(dt).p_coinc, 0.0}; });
    const auto b = run_experiment(
        spec, [&](double dt) { return CurvePoint{eng_disp.probability(dt).p_coinc, 0.0}; });
    CHECK(a.rms_error == b.rms_error); // well inside the 20% contract
    for (std::size_t i = 0; i < a.reps.size(); ++i)
        CHECK(a.reps[i].estimate == b.reps[i].estimate);
}

TEST_CASE("schedule validation") {
    ScanSchedule s;
    s.trial_shifts = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(s.validate(), config_error); // too few
    s.trial_shifts = linspace(0.0, 1.0, 16);
    s.trial_shifts[7] = s.trial_shifts[8]; // not strictly increasing
    CHECK_THROWS_AS(s.validate(), config_error);
    s.trial_shifts = linspace(0.0, 1.0, 16);
    s.pulses_per_shift = 0;
    CHECK_THROWS_AS(s.validate(), config_error);
    s.pulses_per_shift = 1;
    CHECK_NOTHROW(s.validate());
}
