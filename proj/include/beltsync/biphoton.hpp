#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beltsync/detail/kahan.hpp"
#include "beltsync/dispersion.hpp"
#include "beltsync/errors.hpp"
#include "beltsync/grid.hpp"

// Frequency-entangled bi-photon input: coincidence probability versus clock
// offset (the Mandel dip) and the relaxed dispersion-cancellation condition.
namespace beltsync::biphoton {

using optics::cplx;
using optics::DispersionProfile;

inline constexpr double kNormalizationTol = 1e-6;

// |Psi> = integral dw phi(w) |omega0+w>|omega0-w>, phi given versus detuning.
class BiphotonState {
  public:
    enum class Shape { gaussian, tabulated };

    static BiphotonState gaussian(double omega0, double sigma_q, double coincidence_window) {
        if (!(omega0 > 0.0)) throw config_error("BiphotonState: omega0 must be > 0");
        if (!(sigma_q > 0.0)) throw config_error("BiphotonState: sigma_q must be > 0");
        if (!(coincidence_window > 0.0))
            throw config_error("BiphotonState: coincidence_window must be > 0");
        BiphotonState s;
        s.shape_ = Shape::gaussian;
        s.omega0_ = omega0;
        s.sigma_q_ = sigma_q;
        s.window_ = coincidence_window;
        return s;
    }

    // |phi|^2 samples on an increasing detuning grid; must integrate to 1.
    static BiphotonState tabulated(double omega0, std::vector<double> detunings,
                                   std::vector<double> densities,
                                   double coincidence_window) {
        if (detunings.size() < 2 || detunings.size() != densities.size())
            throw config_error("BiphotonState: tabulated arrays empty or size-mismatched");
        for (std::size_t i = 1; i < detunings.size(); ++i)
            if (!(detunings[i] > detunings[i - 1]))
                throw config_error("BiphotonState: detunings must be strictly increasing");
        BiphotonState s;
        s.shape_ = Shape::tabulated;
        s.omega0_ = omega0;
        s.window_ = coincidence_window;
        s.tab_det_ = std::move(detunings);
        s.tab_density_ = std::move(densities);
        double norm = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i + 1 < s.tab_det_.size(); ++i) {
            const double dw = s.tab_det_[i + 1] - s.tab_det_[i];
            norm += 0.5 * dw * (s.tab_density_[i] + s.tab_density_[i + 1]);
            m1 += 0.5 * dw *
                  (s.tab_density_[i] * s.tab_det_[i] + s.tab_density_[i + 1] * s.tab_det_[i + 1]);
            m2 += 0.5 * dw *
                  (s.tab_density_[i] * s.tab_det_[i] * s.tab_det_[i] +
                   s.tab_density_[i + 1] * s.tab_det_[i + 1] * s.tab_det_[i + 1]);
        }
        if (!(norm > 0.0)) throw config_error("BiphotonState: tabulated density is all zero");
        const double mean = m1 / norm;
        s.sigma_q_ = std::sqrt(std::max(m2 / norm - mean * mean, 0.0));
        return s;
    }

    Shape shape() const { return shape_; }
    double omega0() const { return omega0_; }
    double bandwidth() const { return sigma_q_; } // RMS width of |phi|^2
    double coincidence_window() const { return window_; }

    // |phi(detuning)|^2
    double density(double detuning) const {
        if (shape_ == Shape::gaussian) {
            const double z = detuning / sigma_q_;
            return std::exp(-0.5 * z * z) / (sigma_q_ * std::sqrt(2.0 * std::numbers::pi));
        }
        if (detuning <= tab_det_.front() || detuning >= tab_det_.back()) {
            if (detuning == tab_det_.front()) return tab_density_.front();
            if (detuning == tab_det_.back()) return tab_density_.back();
            return 0.0;
        }
        const auto it = std::upper_bound(tab_det_.begin(), tab_det_.end(), detuning);
        const std::size_t j = static_cast<std::size_t>(it - tab_det_.begin());
        const double w0 = tab_det_[j - 1], w1 = tab_det_[j];
        const double f = (detuning - w0) / (w1 - w0);
        return tab_density_[j - 1] * (1.0 - f) + tab_density_[j] * f;
    }

    FrequencyGrid default_grid(std::size_t n = kDefaultGridPoints) const {
        FrequencyGrid g;
        g.n = n;
        if (shape_ == Shape::gaussian) {
            g.lo = -8.0 * sigma_q_;
            g.hi = 8.0 * sigma_q_;
        } else {
            g.lo = tab_det_.front();
            g.hi = tab_det_.back();
        }
        return g;
    }

    // The analysis assumes a coincidence window long against the inverse
    // bandwidth, at which point the window length drops out.
    std::optional<std::string> window_warning() const {
        if (window_ < 100.0 / sigma_q_)
            return "coincidence window " + std::to_string(window_) +
                   " s is short against 100/bandwidth = " +
                   std::to_string(100.0 / sigma_q_) + " s";
        return std::nullopt;
    }

  private:
    BiphotonState() = default;

    Shape shape_ = Shape::gaussian;
    double omega0_ = 0.0;
    double sigma_q_ = 0.0;
    double window_ = 0.0;
    std::vector<double> tab_det_, tab_density_;
};

struct DipSample {
    double delta_t = 0.0;
    double p_coinc = 0.0; // normalized coincidence probability, asymptote 1/2
};

// Quantum cancellation: the coincidence dip is dispersion-free when the
// odd-order Taylor coefficients of the two roundtrip dispersions agree;
// even orders are unconstrained.
inline optics::DispersionCheck quantum_cancellation_check(const DispersionProfile& d,
                                                          double tol = 0.0) {
    const auto p = d.composite_plus();
    const auto m = d.composite_minus();
    const std::size_t nc = std::max(p.coeffs.size(), m.coeffs.size());
    double residual = 0.0;
    for (std::size_t i = 1; i < nc; i += 2) {
        const cplx a = i < p.coeffs.size() ? p.coeffs[i] : cplx{};
        const cplx b = i < m.coeffs.size() ? m.coeffs[i] : cplx{};
        residual = std::max(residual, std::abs(a - b));
    }
    return optics::DispersionCheck{residual <= tol, residual};
}

// Residual dispersion phase after the pair-frequency correlation cancels the
// even-order terms: the two detection paths differ by
// [kp(w0+w) + km(w0-w)] - [kp(w0-w) + km(w0+w)].
template <class Drive>
cplx residual_phase(const Drive& drive, const DispersionProfile& disp, double omega0,
                    double detuning) {
    return (drive.kappa_plus(disp, omega0 + detuning) +
            drive.kappa_minus(disp, omega0 - detuning)) -
           (drive.kappa_plus(disp, omega0 - detuning) +
            drive.kappa_minus(disp, omega0 + detuning));
}

// Coincidence-probability engine on a detuning grid. The normalization fixes
// the large-offset asymptote to 1/2, mirroring the classical fringe mean.
template <class Drive>
class DipEngine {
  public:
    DipEngine(const BiphotonState& state, const Drive& drive,
              const DispersionProfile& disp, FrequencyGrid grid)
        : drive_(drive), grid_(grid) {
        grid_.validate();
        const std::size_t n = grid_.n;
        det_.resize(n);
        base_re_.resize(n);
        base_im_.resize(n);
        beltsync::detail::Kahan norm, asym;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = grid_.omega(i);
            det_[i] = w;
            const double wphi = grid_.weight(i) * state.density(w);
            norm.add(wphi);
            const cplx delta = residual_phase(drive_, disp, state.omega0(), w);
            const double y = 0.5 * delta.imag();
            const double sh = std::sinh(y);
            asym.add(wphi * (0.5 + sh * sh));
            // cos(2x) term carries the real half-phase
            const cplx coef = wphi * std::polar(1.0, delta.real());
            base_re_[i] = coef.real();
            base_im_[i] = coef.imag();
        }
        norm_ = norm.total();
        asym_ = asym.total();
        if (std::fabs(norm_ - 1.0) > kNormalizationTol)
            throw numeric_error("biphoton spectral density not normalized on the grid "
                                "(integral = " +
                                std::to_string(norm_) + "); normalize phi or refine the grid");
    }

    DipEngine(const BiphotonState& state, const Drive& drive, const DispersionProfile& disp)
        : DipEngine(state, drive, disp, state.default_grid()) {}

    DipSample probability(double delta_t) const {
        if (!std::isfinite(delta_t))
            throw config_error("DipEngine: offset must be finite");
        const double tau_d = drive_.differential_delay(delta_t);
        // P_raw = sum wphi [sin^2(x) + sinh^2(y)],  x = -w*tau_d + Re(delta)/2
        //       = asym - (1/2) Re sum wphi e^{i Re delta} e^{-2 i w tau_d}
        const double ang = -2.0 * tau_d;
        const std::size_t n = det_.size();
        const double dph = ang * grid_.step();
        const double sr = std::cos(dph), si = std::sin(dph);
        beltsync::detail::Kahan acc;
        double rr = 1.0, ri = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((i & 511u) == 0) {
                const double ph = ang * det_[i];
                rr = std::cos(ph);
                ri = std::sin(ph);
            }
            acc.add(base_re_[i] * rr - base_im_[i] * ri);
            const double nrr = rr * sr - ri * si;
            ri = rr * si + ri * sr;
            rr = nrr;
        }
        const double p_raw = asym_ - 0.5 * acc.total();
        DipSample s;
        s.delta_t = delta_t;
        s.p_coinc = std::max(0.0, p_raw / (2.0 * asym_));
        return s;
    }

    std::vector<DipSample> scan(std::span<const double> offsets) const {
        std::vector<DipSample> out;
        out.reserve(offsets.size());
        for (const double dt : offsets) out.push_back(probability(dt));
        return out;
    }

    const FrequencyGrid& grid() const { return grid_; }

  private:
    Drive drive_;
    FrequencyGrid grid_;
    double norm_ = 0.0;
    double asym_ = 0.0;
    std::vector<double> det_, base_re_, base_im_;
};

template <class Drive>
DipSample coincidence_probability(const BiphotonState& state, const Drive& drive,
                                  const DispersionProfile& disp, double delta_t) {
    return DipEngine<Drive>(state, drive, disp).probability(delta_t);
}

template <class Drive>
std::vector<DipSample> dip_scan(const BiphotonState& state, const Drive& drive,
                                const DispersionProfile& disp,
                                std::span<const double> offsets) {
    return DipEngine<Drive>(state, drive, disp).scan(offsets);
}

// offset scale over which the dip departs from its asymptote
template <class Drive>
double dip_width(const BiphotonState& state, const Drive& drive) {
    const double slope = std::fabs(drive.differential_delay(1.0));
    return 1.0 / (state.bandwidth() * slope);
}

} // namespace beltsync::biphoton
