#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beltsync/detail/kahan.hpp"
#include "beltsync/dispersion.hpp"
#include "beltsync/errors.hpp"
#include "beltsync/grid.hpp"
#include "beltsync/spectrum.hpp"

// Classical coherent-state interferometer observables: branch phase
// transformations, time-resolved flux at the cross-polarized detector, and
// integrated photon numbers versus clock offset (the fringe pattern).
namespace beltsync::optics {

inline constexpr double kNormalizationTol = 1e-6;

// Moving-delay drive in the non-relativistic regime. Both polarizations
// make the same roundtrip; the mirrors imprint a differential delay
// proportional to the clock offset.
struct DelayDrive {
    double v = 0.0; // mirror speed (m/s)
    double c = 0.0; // phase velocity in the medium (m/s)
    double L = 0.0; // one-way distance (m)

    DelayDrive() = default;
    DelayDrive(double v_, double c_, double L_) : v(v_), c(c_), L(L_) { validate(); }

    void validate() const {
        if (!(c > 0.0)) throw config_error("DelayDrive: c must be > 0");
        if (!(v > 0.0)) throw config_error("DelayDrive: v must be > 0");
        if (!(L >= 0.0)) throw config_error("DelayDrive: L must be >= 0");
        if (v / c > 0.01)
            throw config_error("DelayDrive: v/c > 0.01 is outside the non-relativistic "
                               "regime; use rel::RelativisticDrive");
    }

    double beta() const { return -4.0 * v / c; }

    // differential delay between the +-45 degree components
    double differential_delay(double delta_t) const { return beta() * delta_t; }

    double roundtrip_delay() const { return 2.0 * L / c; }

    cplx kappa_plus(const DispersionProfile& d, double w) const { return d.kappa_plus(w); }
    cplx kappa_minus(const DispersionProfile& d, double w) const { return d.kappa_minus(w); }
};

// Accumulated phase (complex: imaginary part attenuates) of each diagonal
// polarization from source to detector.
template <class Drive>
std::pair<cplx, cplx> branch_phases(const Drive& drive, const DispersionProfile& disp,
                                    double delta_t, double omega) {
    const double tau_d = drive.differential_delay(delta_t);
    const double tau = drive.roundtrip_delay();
    const cplx phi_plus = cplx{omega * (tau - tau_d), 0.0} + drive.kappa_plus(disp, omega);
    const cplx phi_minus = cplx{omega * (tau + tau_d), 0.0} + drive.kappa_minus(disp, omega);
    return {phi_plus, phi_minus};
}

struct FringeSample {
    double delta_t = 0.0;
    double j_cross = 0.0; // mean photon number at the cross-polarized detector
    double j_par = 0.0;   // mean photon number at the co-polarized detector
};

// Precomputes everything offset-independent on the frequency grid, so that a
// scan over clock offsets costs one rotating phase sum per offset. The
// integrated photon numbers are evaluated in the frequency domain: the time
// integration of the flux is analytic, and the roundtrip delay tau drops out.
template <class Drive>
class FringeEngine {
  public:
    FringeEngine(const PulseSpectrum& spectrum, const Drive& drive,
                 const DispersionProfile& disp, FrequencyGrid grid)
        : drive_(drive), grid_(grid) {
        grid_.validate();
        const std::size_t n = grid_.n;
        omega_.resize(n);
        a2w_.resize(n);
        ampw_re_.resize(n);
        ampw_im_.resize(n);
        cp_.resize(n);
        cm_.resize(n);
        fringe_re_.resize(n);
        fringe_im_.resize(n);

        beltsync::detail::Kahan jq;
        beltsync::detail::Kahan sb;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = grid_.omega(i);
            omega_[i] = w;
            const double wt = grid_.weight(i);
            const double a2 = spectrum.intensity(w);
            a2w_[i] = 2.0 * std::numbers::pi * wt * a2;
            jq.add(a2w_[i]);

            const cplx kp = drive_.kappa_plus(disp, w);
            const cplx km = drive_.kappa_minus(disp, w);
            check_no_gain(kp, w);
            check_no_gain(km, w);
            // e^{i kappa}: real kappa rotates, Im kappa attenuates
            cp_[i] = std::exp(cplx{-kp.imag(), 0.0}) * std::polar(1.0, kp.real());
            cm_[i] = std::exp(cplx{-km.imag(), 0.0}) * std::polar(1.0, km.real());

            const cplx amp = spectrum.amplitude(w);
            ampw_re_[i] = wt * amp.real();
            ampw_im_[i] = wt * amp.imag();

            sb.add(a2w_[i] * 0.25 * (std::norm(cp_[i]) + std::norm(cm_[i])));
            // cp*conj(cm) first: for identical branches its imaginary part
            // cancels exactly, keeping the fringe even in the offset
            const cplx mix = cp_[i] * std::conj(cm_[i]);
            fringe_re_[i] = 0.5 * a2w_[i] * mix.real();
            fringe_im_[i] = 0.5 * a2w_[i] * mix.imag();
        }
        j_grid_ = jq.total();
        s_base_ = sb.total();
        j_input_ = spectrum.total_photons();
        tau_ = drive_.roundtrip_delay();

        const double drift = std::fabs(j_grid_ / j_input_ - 1.0);
        if (drift > kNormalizationTol)
            throw numeric_error(
                "frequency grid under-resolved: quadrature photon number drifts by " +
                std::to_string(drift) + " (tolerance " + std::to_string(kNormalizationTol) +
                "); retry with >= " + std::to_string(4 * n) + " points over [" +
                std::to_string(grid_.lo) + ", " + std::to_string(grid_.hi) + "] rad/s");
    }

    FringeEngine(const PulseSpectrum& spectrum, const Drive& drive,
                 const DispersionProfile& disp)
        : FringeEngine(spectrum, drive, disp, spectrum.default_grid()) {}

    // J_cross / J_par at one clock offset
    FringeSample sample(double delta_t) const {
        if (!std::isfinite(delta_t))
            throw config_error("FringeEngine: offset must be finite");
        const double r = fringe_term(drive_.differential_delay(delta_t));
        FringeSample s;
        s.delta_t = delta_t;
        s.j_cross = std::max(0.0, s_base_ - r);
        s.j_par = std::max(0.0, s_base_ + r);
        return s;
    }

    std::vector<FringeSample> scan(std::span<const double> offsets) const {
        std::vector<FringeSample> out;
        out.reserve(offsets.size());
        for (const double dt : offsets) out.push_back(sample(dt));
        return out;
    }

    // average photon flux at the cross-polarized detector at detection time t
    double flux(double delta_t, double t) const {
        return flux_profile(delta_t, t, t, 1).front();
    }

    // I_cross(t) on nt uniform detection times spanning [t_lo, t_hi]
    std::vector<double> flux_profile(double delta_t, double t_lo, double t_hi,
                                     std::size_t nt) const {
        const double tau_d = drive_.differential_delay(delta_t);
        const std::size_t n = omega_.size();
        // offset-dependent branch mix, independent of detection time
        std::vector<double> bre(n), bim(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = omega_[i] * tau_d;
            const cplx ep = std::polar(1.0, -ph);
            const cplx em = std::polar(1.0, ph);
            const cplx b = 0.5 * (cp_[i] * ep - cm_[i] * em) *
                           cplx{ampw_re_[i], ampw_im_[i]};
            bre[i] = b.real();
            bim[i] = b.imag();
        }
        std::vector<double> out(nt);
        const double dt_step = nt > 1 ? (t_hi - t_lo) / static_cast<double>(nt - 1) : 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            const double u = t_lo + dt_step * static_cast<double>(j) - tau_;
            // E(u) = sum_i b_i e^{-i omega_i u}
            beltsync::detail::Kahan er, ei;
            double rr = 1.0, ri = 0.0;
            const double dph = -grid_.step() * u;
            const double sr = std::cos(dph), si = std::sin(dph);
            for (std::size_t i = 0; i < n; ++i) {
                if ((i & 511u) == 0) {
                    const double ph = -omega_[i] * u;
                    rr = std::cos(ph);
                    ri = std::sin(ph);
                }
                er.add(bre[i] * rr - bim[i] * ri);
                ei.add(bre[i] * ri + bim[i] * rr);
                const double nrr = rr * sr - ri * si;
                ri = rr * si + ri * sr;
                rr = nrr;
            }
            out[j] = er.total() * er.total() + ei.total() * ei.total();
        }
        return out;
    }

    double total_photons() const { return j_input_; }
    double quadrature_photons() const { return j_grid_; }
    double roundtrip_delay() const { return tau_; }
    const FrequencyGrid& grid() const { return grid_; }
    const Drive& drive() const { return drive_; }

  private:
    static void check_no_gain(const cplx& kappa, double w) {
        if (kappa.imag() < -1e-12 * (1.0 + std::abs(kappa)))
            throw numeric_error("dispersion profile implies gain (Im kappa = " +
                                std::to_string(kappa.imag()) + " < 0 at omega = " +
                                std::to_string(w) + ")");
    }

    // Re sum_i fringe_i * exp(-2 i omega_i tau_d), evaluated with a rotating
    // phasor (periodically resynced) and four interleaved compensated
    // accumulators.
    double fringe_term(double tau_d) const {
        const double ang = -2.0 * tau_d;
        const std::size_t n = omega_.size();
        const double dph = ang * grid_.step();
        const double sr = std::cos(dph), si = std::sin(dph);
        // stride-4 rotation
        const double dph4 = 4.0 * dph;
        const double sr4 = std::cos(dph4), si4 = std::sin(dph4);

        beltsync::detail::Kahan acc[4];
        double rr[4], ri[4];
        std::size_t i = 0;
        for (std::size_t base = 0; base < n; base += 512) {
            const std::size_t end = std::min(base + 512, n);
            // resync the four lane phasors
            for (std::size_t k = 0; k < 4; ++k) {
                const std::size_t idx = base + k < n ? base + k : n - 1;
                const double ph = ang * omega_[idx];
                rr[k] = std::cos(ph);
                ri[k] = std::sin(ph);
            }
            for (i = base; i + 4 <= end; i += 4) {
                for (std::size_t k = 0; k < 4; ++k) {
                    acc[k].add(fringe_re_[i + k] * rr[k] - fringe_im_[i + k] * ri[k]);
                    const double nrr = rr[k] * sr4 - ri[k] * si4;
                    ri[k] = rr[k] * si4 + ri[k] * sr4;
                    rr[k] = nrr;
                }
            }
            // tail of the block
            if (i < end) {
                double trr = std::cos(ang * omega_[i]);
                double tri = std::sin(ang * omega_[i]);
                for (; i < end; ++i) {
                    acc[0].add(fringe_re_[i] * trr - fringe_im_[i] * tri);
                    const double nrr = trr * sr - tri * si;
                    tri = trr * si + tri * sr;
                    trr = nrr;
                }
            }
        }
        double total = 0.0;
        for (std::size_t k = 0; k < 4; ++k) total += acc[k].total();
        return total;
    }

    Drive drive_;
    FrequencyGrid grid_;
    double tau_ = 0.0;
    double j_input_ = 0.0;
    double j_grid_ = 0.0;
    double s_base_ = 0.0;
    std::vector<double> omega_, a2w_;
    std::vector<double> ampw_re_, ampw_im_;
    std::vector<cplx> cp_, cm_;
    std::vector<double> fringe_re_, fringe_im_;
};

// One-shot helpers for single evaluations; build a FringeEngine for scans.
template <class Drive>
FringeSample integrated_counts(const PulseSpectrum& spectrum, const Drive& drive,
                               const DispersionProfile& disp, double delta_t) {
    return FringeEngine<Drive>(spectrum, drive, disp).sample(delta_t);
}

template <class Drive>
double photon_flux(const PulseSpectrum& spectrum, const Drive& drive,
                   const DispersionProfile& disp, double delta_t, double t) {
    return FringeEngine<Drive>(spectrum, drive, disp).flux(delta_t, t);
}

template <class Drive>
std::vector<FringeSample> fringe_scan(const PulseSpectrum& spectrum, const Drive& drive,
                                      const DispersionProfile& disp,
                                      std::span<const double> offsets) {
    return FringeEngine<Drive>(spectrum, drive, disp).scan(offsets);
}

// fringe period in clock offset: the phase advances by 2*omega0*|dtau_d/ddt|
template <class Drive>
double fringe_period(const Drive& drive, double omega0) {
    const double slope = std::fabs(drive.differential_delay(1.0));
    return std::numbers::pi / (omega0 * slope);
}

} // namespace beltsync::optics
