#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "beltsync/errors.hpp"
#include "beltsync/grid.hpp"

namespace beltsync::optics {

// Coherent-state spectral amplitude alpha(omega). Normalization:
// 2*pi * integral |alpha|^2 domega = total_photons (the mean photon number
// of the pulse). delta_omega is the RMS width of the |alpha|^2 density.
class PulseSpectrum {
  public:
    enum class Shape { gaussian, tabulated };

    static PulseSpectrum gaussian(double omega0, double delta_omega, double total_photons) {
        if (!(omega0 > 0.0)) throw config_error("PulseSpectrum: omega0 must be > 0");
        if (!(delta_omega > 0.0)) throw config_error("PulseSpectrum: delta_omega must be > 0");
        if (!(total_photons > 0.0)) throw config_error("PulseSpectrum: total_photons must be > 0");
        PulseSpectrum s;
        s.shape_ = Shape::gaussian;
        s.omega0_ = omega0;
        s.delta_omega_ = delta_omega;
        s.total_photons_ = total_photons;
        return s;
    }

    // Samples of |alpha|^2 (and optional spectral phase) on an increasing
    // frequency grid. The photon number and moments are derived from the
    // samples so the normalization invariant holds by construction.
    static PulseSpectrum tabulated(std::vector<double> omegas,
                                   std::vector<double> intensities,
                                   std::vector<double> phases = {}) {
        if (omegas.size() < 2 || omegas.size() != intensities.size())
            throw config_error("PulseSpectrum: tabulated arrays empty or size-mismatched");
        if (!phases.empty() && phases.size() != omegas.size())
            throw config_error("PulseSpectrum: phases size mismatch");
        for (std::size_t i = 1; i < omegas.size(); ++i)
            if (!(omegas[i] > omegas[i - 1]))
                throw config_error("PulseSpectrum: omegas must be strictly increasing");
        for (double v : intensities)
            if (!(v >= 0.0)) throw config_error("PulseSpectrum: negative intensity sample");

        PulseSpectrum s;
        s.shape_ = Shape::tabulated;
        s.tab_omega_ = std::move(omegas);
        s.tab_intensity_ = std::move(intensities);
        s.tab_phase_ = std::move(phases);

        double norm = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i + 1 < s.tab_omega_.size(); ++i) {
            const double dw = s.tab_omega_[i + 1] - s.tab_omega_[i];
            const double f0 = s.tab_intensity_[i], f1 = s.tab_intensity_[i + 1];
            norm += 0.5 * dw * (f0 + f1);
            m1 += 0.5 * dw * (f0 * s.tab_omega_[i] + f1 * s.tab_omega_[i + 1]);
            m2 += 0.5 * dw *
                  (f0 * s.tab_omega_[i] * s.tab_omega_[i] +
                   f1 * s.tab_omega_[i + 1] * s.tab_omega_[i + 1]);
        }
        if (!(norm > 0.0)) throw config_error("PulseSpectrum: tabulated intensity is all zero");
        s.total_photons_ = 2.0 * std::numbers::pi * norm;
        s.omega0_ = m1 / norm;
        const double var = m2 / norm - s.omega0_ * s.omega0_;
        s.delta_omega_ = std::sqrt(std::max(var, 0.0));
        if (!(s.delta_omega_ > 0.0))
            throw config_error("PulseSpectrum: tabulated spectrum has zero width");
        return s;
    }

    Shape shape() const { return shape_; }
    double omega0() const { return omega0_; }
    double delta_omega() const { return delta_omega_; }
    double total_photons() const { return total_photons_; }

    // |alpha(w)|^2
    double intensity(double w) const {
        if (shape_ == Shape::gaussian) {
            const double z = (w - omega0_) / delta_omega_;
            const double pdf = std::exp(-0.5 * z * z) /
                               (delta_omega_ * std::sqrt(2.0 * std::numbers::pi));
            return total_photons_ / (2.0 * std::numbers::pi) * pdf;
        }
        return interpolate(tab_intensity_, w);
    }

    std::complex<double> amplitude(double w) const {
        const double mag = std::sqrt(intensity(w));
        if (shape_ == Shape::gaussian || tab_phase_.empty()) return {mag, 0.0};
        const double ph = interpolate(tab_phase_, w);
        return std::polar(mag, ph);
    }

    FrequencyGrid default_grid(std::size_t n = kDefaultGridPoints) const {
        FrequencyGrid g;
        g.n = n;
        if (shape_ == Shape::gaussian) {
            g.lo = omega0_ - 8.0 * delta_omega_;
            g.hi = omega0_ + 8.0 * delta_omega_;
            if (!(g.lo > 0.0))
                throw config_error("PulseSpectrum: band omega0 +- 8*delta_omega crosses zero; "
                                   "omega0 must exceed 8*delta_omega");
        } else {
            g.lo = tab_omega_.front();
            g.hi = tab_omega_.back();
        }
        return g;
    }

    std::optional<std::string> bandwidth_warning() const {
        if (omega0_ < 20.0 * delta_omega_)
            return "omega0 = " + std::to_string(omega0_) +
                   " is not large against delta_omega = " + std::to_string(delta_omega_);
        return std::nullopt;
    }

  private:
    PulseSpectrum() = default;

    double interpolate(const std::vector<double>& values, double w) const {
        if (w <= tab_omega_.front() || w >= tab_omega_.back()) {
            if (w == tab_omega_.front()) return values.front();
            if (w == tab_omega_.back()) return values.back();
            return 0.0;
        }
        const auto it = std::upper_bound(tab_omega_.begin(), tab_omega_.end(), w);
        const std::size_t j = static_cast<std::size_t>(it - tab_omega_.begin());
        const double w0 = tab_omega_[j - 1], w1 = tab_omega_[j];
        const double f = (w - w0) / (w1 - w0);
        return values[j - 1] * (1.0 - f) + values[j] * f;
    }

    Shape shape_ = Shape::gaussian;
    double omega0_ = 0.0;
    double delta_omega_ = 0.0;
    double total_photons_ = 0.0;
    std::vector<double> tab_omega_, tab_intensity_, tab_phase_;
};

} // namespace beltsync::optics
