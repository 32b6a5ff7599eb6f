#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "beltsync/belt.hpp"
#include "beltsync/biphoton.hpp"
#include "beltsync/config.hpp"
#include "beltsync/errors.hpp"
#include "beltsync/estimator.hpp"
#include "beltsync/optics.hpp"
#include "beltsync/relativity.hpp"

// Scenario runner: builds domain objects from a ConfigDoc, dispatches on the
// run mode and emits machine-readable artifacts with a provenance header.
namespace beltsync::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
    std::string mode_override;                  // empty = use config mode
    std::optional<std::uint64_t> seed_override; // overrides [estimate] seed
};

struct RunResult {
    std::string mode;
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string fmt(double x) {
    if (!std::isfinite(x)) throw numeric_error("non-finite value in output");
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt_u64(std::uint64_t x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%" PRIu64, x);
    return buf;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

class Artifact {
  public:
    Artifact(const std::filesystem::path& path, const std::string& mode,
             std::uint64_t cfg_hash, std::uint64_t seed)
        : out_(path, std::ios::binary) {
        if (!out_) throw numeric_error("cannot open output file: " + path.string());
        out_ << "# beltsync " << kToolVersion << "\n";
        out_ << "# config_hash=" << hash_hex(cfg_hash) << "\n";
        out_ << "# seed=" << fmt_u64(seed) << "\n";
        out_ << "# mode=" << mode << "\n";
    }

    void line(const std::string& s) { out_ << s << "\n"; }

    void kv(const std::string& key, const std::string& value) {
        out_ << key << "=" << value << "\n";
    }

  private:
    std::ofstream out_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Config -> domain objects

inline belt::ClockPair clocks_from(const ConfigDoc& doc) {
    belt::ClockPair c;
    c.t0_a = doc.get_double("clocks", "t0_a", 0.0);
    c.t0_b = doc.get_double("clocks", "t0_b", 0.0);
    c.rate_b = doc.get_double("clocks", "rate_b", 1.0);
    c.drift_b = doc.get_double("clocks", "drift_b", 0.0);
    c.validate();
    return c;
}

inline belt::BeltScenario belt_from(const ConfigDoc& doc) {
    doc.require_section("belt", "belt scenario parameters");
    const double s = doc.require_double("belt", "s");
    const double T = doc.require_double("belt", "T");
    belt::BeltScenario sc(s, T, doc.maybe_double("belt", "T_prime"),
                          doc.maybe_double("belt", "belt_speed"));
    sc.validate();
    return sc;
}

inline optics::PulseSpectrum spectrum_from(const ConfigDoc& doc) {
    doc.require_section("spectrum", "pulse spectrum parameters");
    const std::string shape = doc.has("spectrum", "shape")
                                  ? doc.require_string("spectrum", "shape")
                                  : "gaussian";
    if (shape == "gaussian") {
        return optics::PulseSpectrum::gaussian(doc.require_double("spectrum", "omega0"),
                                               doc.require_double("spectrum", "delta_omega"),
                                               doc.require_double("spectrum", "total_photons"));
    }
    if (shape == "tabulated") {
        auto omegas = doc.get_list("spectrum", "omegas");
        auto intens = doc.get_list("spectrum", "intensities");
        auto phases = doc.get_list("spectrum", "phases");
        if (omegas.empty()) throw config_error("missing required field [spectrum] omegas");
        if (intens.empty())
            throw config_error("missing required field [spectrum] intensities");
        return optics::PulseSpectrum::tabulated(std::move(omegas), std::move(intens),
                                                std::move(phases));
    }
    throw config_error("field [spectrum] shape: expected gaussian or tabulated, got '" +
                       shape + "'");
}

inline optics::DispersionProfile dispersion_from(const ConfigDoc& doc, double omega0) {
    auto poly = [&](const std::string& key) {
        const auto re = doc.get_list("dispersion", key);
        const auto im = doc.get_list("dispersion", key + "_im");
        std::vector<optics::cplx> coeffs(std::max(re.size(), im.size()));
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            coeffs[i] = optics::cplx{i < re.size() ? re[i] : 0.0,
                                     i < im.size() ? im[i] : 0.0};
        return coeffs;
    };
    return optics::DispersionProfile(omega0, poly("plus45_to"), poly("plus45_from"),
                                     poly("minus45_to"), poly("minus45_from"));
}

inline bool drive_is_relativistic(const ConfigDoc& doc) {
    return doc.get_bool("drive", "relativistic", false);
}

inline optics::DelayDrive delay_drive_from(const ConfigDoc& doc) {
    doc.require_section("drive", "moving-delay drive parameters");
    return optics::DelayDrive(doc.require_double("drive", "v"),
                              doc.require_double("drive", "c"),
                              doc.get_double("drive", "L", 0.0));
}

inline rel::RelativisticDrive rel_drive_from(const ConfigDoc& doc) {
    doc.require_section("drive", "moving-delay drive parameters");
    return rel::RelativisticDrive(doc.require_double("drive", "v"),
                                  doc.require_double("drive", "c"),
                                  doc.get_double("drive", "L", 0.0));
}

inline biphoton::BiphotonState biphoton_from(const ConfigDoc& doc) {
    doc.require_section("biphoton", "bi-photon state parameters");
    const double omega0 = doc.has("biphoton", "omega0")
                              ? doc.require_double("biphoton", "omega0")
                              : doc.require_double("spectrum", "omega0");
    return biphoton::BiphotonState::gaussian(omega0,
                                             doc.require_double("biphoton", "sigma_q"),
                                             doc.require_double("biphoton", "T_c"));
}

inline std::vector<double> scan_offsets_from(const ConfigDoc& doc) {
    doc.require_section("scan", "offset scan parameters");
    const double lo = doc.require_double("scan", "offset_min");
    const double hi = doc.require_double("scan", "offset_max");
    const std::uint64_t points = doc.require_u64("scan", "points");
    if (!(hi > lo)) throw config_error("field [scan] offset_max: must exceed offset_min");
    if (points < 2) throw config_error("field [scan] points: need at least 2");
    return estimator::linspace(lo, hi, static_cast<std::size_t>(points));
}

// ---------------------------------------------------------------------------
// Mode runners

namespace detail {

struct Provenance {
    std::uint64_t cfg_hash = 0;
    std::uint64_t seed = 0;
    std::string mode;
};

inline void run_belt(const ConfigDoc& doc, const std::filesystem::path& out,
                     const Provenance& prov, RunResult& result) {
    const auto sc = belt_from(doc);
    const auto clocks = clocks_from(doc);
    if (sc.T_prime != sc.T)
        throw config_error("belt mode requires T_prime = T; use differential mode");
    Artifact a(out / "report.txt", prov.mode, prov.cfg_hash, prov.seed);
    if (clocks.perfect()) {
        a.kv("q_d", fmt(belt::steady_state_readout(sc, clocks)));
    } else {
        const double t = sc.transient_end(clocks) + 2.0 * sc.T + 1.0;
        a.kv("q_d", fmt(belt::rate_mismatch_readout(sc, clocks, t)));
        a.kv("readout_time", fmt(t));
    }
    a.kv("transient_end", fmt(sc.transient_end(clocks)));
    result.files.push_back((out / "report.txt").string());
}

inline void run_range(const ConfigDoc& doc, const std::filesystem::path& out,
                      const Provenance& prov, RunResult& result) {
    const auto sc = belt_from(doc);
    const auto r = belt::ranging_readout(sc);
    Artifact a(out / "report.txt", prov.mode, prov.cfg_hash, prov.seed);
    a.kv("q_d", fmt(r.q_d));
    a.kv("transit_time", fmt(r.transit_time));
    if (r.distance) a.kv("distance", fmt(*r.distance));
    result.files.push_back((out / "report.txt").string());
}

inline void run_differential(const ConfigDoc& doc, const std::filesystem::path& out,
                             const Provenance& prov, RunResult& result) {
    const auto sc = belt_from(doc);
    const auto clocks = clocks_from(doc);
    const auto d = belt::differential_readout(sc, clocks);
    Artifact a(out / "report.txt", prov.mode, prov.cfg_hash, prov.seed);
    a.kv("q_d1", fmt(d.q_d1));
    a.kv("q_d2", fmt(d.q_d2));
    a.kv("sum", fmt(d.sum));
    result.files.push_back((out / "report.txt").string());
}

template <class Drive>
void write_fringe_csv(const optics::PulseSpectrum& spectrum, const Drive& drive,
                      const optics::DispersionProfile& disp,
                      const std::vector<double>& offsets,
                      const std::filesystem::path& out, const Provenance& prov,
                      RunResult& result) {
    const optics::FringeEngine<Drive> engine(spectrum, drive, disp);
    Artifact a(out / "fringe.csv", prov.mode, prov.cfg_hash, prov.seed);
    a.line("offset_s,j_cross,j_par");
    for (const double dt : offsets) {
        const auto s = engine.sample(dt);
        a.line(fmt(s.delta_t) + "," + fmt(s.j_cross) + "," + fmt(s.j_par));
    }
    result.files.push_back((out / "fringe.csv").string());
}

inline void run_fringe(const ConfigDoc& doc, const std::filesystem::path& out,
                       const Provenance& prov, RunResult& result) {
    const auto spectrum = spectrum_from(doc);
    if (auto w = spectrum.bandwidth_warning()) result.warnings.push_back(*w);
    const auto disp = dispersion_from(doc, spectrum.omega0());
    const auto offsets = scan_offsets_from(doc);
    if (drive_is_relativistic(doc))
        write_fringe_csv(spectrum, rel_drive_from(doc), disp, offsets, out, prov, result);
    else
        write_fringe_csv(spectrum, delay_drive_from(doc), disp, offsets, out, prov, result);
}

template <class Drive>
void write_dip_csv(const biphoton::BiphotonState& state, const Drive& drive,
                   const optics::DispersionProfile& disp,
                   const std::vector<double>& offsets, const std::filesystem::path& out,
                   const Provenance& prov, RunResult& result) {
    const biphoton::DipEngine<Drive> engine(state, drive, disp);
    Artifact a(out / "dip.csv", prov.mode, prov.cfg_hash, prov.seed);
    a.line("offset_s,p_coinc");
    for (const double dt : offsets) {
        const auto s = engine.probability(dt);
        a.line(fmt(s.delta_t) + "," + fmt(s.p_coinc));
    }
    result.files.push_back((out / "dip.csv").string());
}

inline void run_dip(const ConfigDoc& doc, const std::filesystem::path& out,
                    const Provenance& prov, RunResult& result) {
    const auto state = biphoton_from(doc);
    if (auto w = state.window_warning()) result.warnings.push_back(*w);
    const auto disp = dispersion_from(doc, state.omega0());
    const auto offsets = scan_offsets_from(doc);
    if (drive_is_relativistic(doc))
        write_dip_csv(state, rel_drive_from(doc), disp, offsets, out, prov, result);
    else
        write_dip_csv(state, delay_drive_from(doc), disp, offsets, out, prov, result);
}

inline estimator::ScanSchedule schedule_from(const ConfigDoc& doc, std::uint64_t seed) {
    doc.require_section("estimate", "estimator parameters");
    estimator::ScanSchedule sched;
    if (doc.has("estimate", "trial_shifts")) {
        sched.trial_shifts = doc.get_list("estimate", "trial_shifts");
    } else {
        const double lo = doc.require_double("estimate", "trial_min");
        const double hi = doc.require_double("estimate", "trial_max");
        const std::uint64_t pts = doc.require_u64("estimate", "trial_points");
        if (!(hi > lo))
            throw config_error("field [estimate] trial_max: must exceed trial_min");
        sched.trial_shifts = estimator::linspace(lo, hi, static_cast<std::size_t>(pts));
    }
    sched.pulses_per_shift = doc.get_u64("estimate", "pulses_per_shift", 1);
    sched.seed = seed;
    sched.use_complement = doc.get_bool("estimate", "use_complement", false);
    sched.noiseless = doc.get_bool("estimate", "noiseless", false);
    sched.validate();
    return sched;
}

template <class Drive>
estimator::EstimateReport run_estimate_mode(const ConfigDoc& doc, const Drive& drive,
                                            const estimator::ScanSchedule& sched,
                                            estimator::Mode mode, double true_offset,
                                            int repetitions, double* predicted,
                                            RunResult& result) {
    estimator::ExperimentSpec spec;
    spec.mode = mode;
    spec.schedule = sched;
    spec.repetitions = repetitions;
    spec.true_offset = true_offset;
    if (mode == estimator::Mode::classical) {
        const auto spectrum = spectrum_from(doc);
        if (auto w = spectrum.bandwidth_warning()) result.warnings.push_back(*w);
        const auto disp = dispersion_from(doc, spectrum.omega0());
        const optics::FringeEngine<Drive> engine(spectrum, drive, disp);
        spec.fringe_period = optics::fringe_period(drive, spectrum.omega0());
        spec.photons_per_pulse = spectrum.total_photons();
        auto report = estimator::run_experiment(spec, [&](double off) {
            const auto s = engine.sample(off);
            return estimator::CurvePoint{s.j_cross, s.j_par};
        });
        *predicted = estimator::classical_accuracy(drive.v, drive.c, spectrum.omega0(),
                                                   report.snr);
        return report;
    }
    const auto state = biphoton_from(doc);
    if (auto w = state.window_warning()) result.warnings.push_back(*w);
    const auto disp = dispersion_from(doc, state.omega0());
    const biphoton::DipEngine<Drive> engine(state, drive, disp);
    spec.dip_width = biphoton::dip_width(state, drive);
    auto report = estimator::run_experiment(spec, [&](double off) {
        return estimator::CurvePoint{engine.probability(off).p_coinc, 0.0};
    });
    *predicted = estimator::quantum_accuracy(state.bandwidth(), report.snr);
    return report;
}

inline void run_estimate(const ConfigDoc& doc, const std::filesystem::path& out,
                         const Provenance& prov, RunResult& result) {
    const auto clocks = clocks_from(doc);
    const double true_offset = clocks.offset();
    const auto sched = schedule_from(doc, prov.seed);
    const int repetitions =
        static_cast<int>(doc.get_u64("estimate", "repetitions", 1));
    const std::string mode_str = doc.has("estimate", "mode")
                                     ? doc.require_string("estimate", "mode")
                                     : "classical";
    estimator::Mode mode;
    if (mode_str == "classical") mode = estimator::Mode::classical;
    else if (mode_str == "quantum") mode = estimator::Mode::quantum;
    else
        throw config_error("field [estimate] mode: expected classical or quantum, got '" +
                           mode_str + "'");

    double predicted = 0.0;
    estimator::EstimateReport report;
    if (drive_is_relativistic(doc))
        report = run_estimate_mode(doc, rel_drive_from(doc), sched, mode, true_offset,
                                   repetitions, &predicted, result);
    else
        report = run_estimate_mode(doc, delay_drive_from(doc), sched, mode, true_offset,
                                   repetitions, &predicted, result);

    Artifact a(out / "estimate_report.txt", prov.mode, prov.cfg_hash, prov.seed);
    a.kv("estimator_mode", mode_str);
    a.kv("estimated_offset_s", fmt(report.estimated_offset));
    a.kv("true_offset_s", fmt(report.true_offset));
    a.kv("rms_error_s", fmt(report.rms_error));
    a.kv("bias_s", fmt(report.bias));
    a.kv("snr", fmt(report.snr));
    a.kv("predicted_accuracy_s", fmt(predicted));
    a.kv("repetitions", fmt_u64(static_cast<std::uint64_t>(report.repetitions)));
    result.files.push_back((out / "estimate_report.txt").string());

    Artifact b(out / "estimate_reps.csv", prov.mode, prov.cfg_hash, prov.seed);
    b.line("rep,estimate_s,error_s,counts_total");
    for (std::size_t i = 0; i < report.reps.size(); ++i) {
        const auto& r = report.reps[i];
        b.line(fmt_u64(i) + "," + fmt(r.estimate) + "," + fmt(r.error) + "," +
               fmt_u64(r.counts_total));
    }
    result.files.push_back((out / "estimate_reps.csv").string());
}

} // namespace detail

inline RunResult run_scenario(const ConfigDoc& doc, const std::filesystem::path& outdir,
                              const RunOptions& opts = RunOptions{}) {
    std::string mode = opts.mode_override;
    if (mode.empty()) {
        if (!doc.has("", "mode")) throw config_error("missing required field mode");
        mode = doc.require_string("", "mode");
    }

    detail::Provenance prov;
    prov.cfg_hash = config_hash(doc.raw());
    prov.seed = opts.seed_override.value_or(doc.get_u64("estimate", "seed", 0));
    prov.mode = mode;

    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec && !std::filesystem::is_directory(outdir))
        throw config_error("cannot create output directory: " + outdir.string());

    RunResult result;
    result.mode = mode;
    if (mode == "belt") detail::run_belt(doc, outdir, prov, result);
    else if (mode == "range") detail::run_range(doc, outdir, prov, result);
    else if (mode == "differential") detail::run_differential(doc, outdir, prov, result);
    else if (mode == "fringe") detail::run_fringe(doc, outdir, prov, result);
    else if (mode == "dip") detail::run_dip(doc, outdir, prov, result);
    else if (mode == "estimate") detail::run_estimate(doc, outdir, prov, result);
    else
        throw config_error("field mode: expected one of belt, range, differential, "
                           "fringe, dip, estimate; got '" + mode + "'");
    return result;
}

} // namespace beltsync::cli
