#pragma once

#include <cmath>
#include <complex>
#include <utility>

#include "beltsync/dispersion.hpp"
#include "beltsync/errors.hpp"

// Exact (all orders in v/c) corrections to the moving-delay transformations:
// the differential delay, the roundtrip delay, and the Doppler-scaled
// arguments of the dispersion polynomials.
namespace beltsync::rel {

using optics::cplx;
using optics::DispersionProfile;

struct RelativisticDrive {
    double v = 0.0; // mirror speed (m/s); negative reverses the scalings
    double c = 0.0;
    double L = 0.0;

    RelativisticDrive() = default;
    RelativisticDrive(double v_, double c_, double L_) : v(v_), c(c_), L(L_) { validate(); }

    void validate() const {
        if (!(c > 0.0)) throw config_error("RelativisticDrive: c must be > 0");
        if (!(std::fabs(v) < c)) throw config_error("RelativisticDrive: |v| must be < c");
        if (!(L >= 0.0)) throw config_error("RelativisticDrive: L must be >= 0");
    }

    double beta_ratio() const { return v / c; }

    // chi > 1 for v > 0; swapping v -> -v maps chi -> 1/chi
    double doppler_factor() const {
        const double x = v / c;
        return (1.0 + x) / (1.0 - x);
    }

    double differential_delay(double delta_t) const {
        const double x = v / c;
        return -(4.0 * x / (1.0 - x * x)) * delta_t;
    }

    // first order in v/c, for limit comparisons against the exact value
    double differential_delay_first_order(double delta_t) const {
        return -4.0 * (v / c) * delta_t;
    }

    double roundtrip_delay() const {
        const double x = v / c;
        return (2.0 * L / c) * ((1.0 + x * x) / (1.0 - x * x));
    }

    // The polynomials are evaluated at the Doppler-scaled arguments exactly,
    // with no re-expansion about omega0.
    cplx kappa_plus(const DispersionProfile& d, double w) const {
        const double chi = doppler_factor();
        return d.to_plus(w / chi) + d.from_plus(w * chi);
    }

    cplx kappa_minus(const DispersionProfile& d, double w) const {
        const double chi = doppler_factor();
        return d.to_minus(w * chi) + d.from_minus(w / chi);
    }
};

inline std::pair<cplx, cplx> branch_kappas(const RelativisticDrive& drive,
                                           const DispersionProfile& d, double w) {
    return {drive.kappa_plus(d, w), drive.kappa_minus(d, w)};
}

} // namespace beltsync::rel
