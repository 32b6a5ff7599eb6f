#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include "beltsync/errors.hpp"

namespace beltsync::optics {

using cplx = std::complex<double>;

// Complex Taylor polynomial about omega0: kappa(w) = sum_n k_n (w - omega0)^n.
// The imaginary parts of the k_n model attenuation.
struct DispersionPoly {
    double omega0 = 0.0;
    std::vector<cplx> coeffs; // empty means identically zero

    cplx operator()(double w) const {
        const double u = w - omega0;
        cplx acc{0.0, 0.0};
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * u + coeffs[i];
        return acc;
    }
};

inline DispersionPoly poly_sum(const DispersionPoly& a, const DispersionPoly& b) {
    DispersionPoly out;
    out.omega0 = a.omega0;
    out.coeffs.resize(std::max(a.coeffs.size(), b.coeffs.size()), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) out.coeffs[i] += a.coeffs[i];
    for (std::size_t i = 0; i < b.coeffs.size(); ++i) out.coeffs[i] += b.coeffs[i];
    return out;
}

// Per-polarization, per-direction dispersion of the roundtrip: "plus" is the
// +45 degree component, "minus" the -45 degree one; "to" is propagation
// toward Bob, "from" the return leg.
struct DispersionProfile {
    double omega0 = 0.0;
    DispersionPoly to_plus, from_plus, to_minus, from_minus;

    DispersionProfile() = default;
    DispersionProfile(double omega0_, std::vector<cplx> to_plus_,
                      std::vector<cplx> from_plus_, std::vector<cplx> to_minus_,
                      std::vector<cplx> from_minus_)
        : omega0(omega0_) {
        to_plus = DispersionPoly{omega0_, std::move(to_plus_)};
        from_plus = DispersionPoly{omega0_, std::move(from_plus_)};
        to_minus = DispersionPoly{omega0_, std::move(to_minus_)};
        from_minus = DispersionPoly{omega0_, std::move(from_minus_)};
    }

    static DispersionProfile none(double omega0_ = 0.0) {
        return DispersionProfile(omega0_, {}, {}, {}, {});
    }

    DispersionPoly composite_plus() const { return poly_sum(to_plus, from_plus); }
    DispersionPoly composite_minus() const { return poly_sum(to_minus, from_minus); }

    cplx kappa_plus(double w) const { return to_plus(w) + from_plus(w); }
    cplx kappa_minus(double w) const { return to_minus(w) + from_minus(w); }

    bool lossless() const {
        for (const auto* p : {&to_plus, &from_plus, &to_minus, &from_minus})
            for (const auto& k : p->coeffs)
                if (k.imag() != 0.0) return false;
        return true;
    }
};

struct DispersionCheck {
    bool ok = false;
    double residual = 0.0; // max coefficient deviation
};

// Classical immunity: both polarizations must see the same roundtrip
// dispersion, coefficient by coefficient (complex).
inline DispersionCheck dispersion_immunity_check(const DispersionProfile& d,
                                                 double tol = 0.0) {
    const DispersionPoly p = d.composite_plus();
    const DispersionPoly m = d.composite_minus();
    const std::size_t nc = std::max(p.coeffs.size(), m.coeffs.size());
    double residual = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
        const cplx a = i < p.coeffs.size() ? p.coeffs[i] : cplx{};
        const cplx b = i < m.coeffs.size() ? m.coeffs[i] : cplx{};
        residual = std::max(residual, std::abs(a - b));
    }
    return DispersionCheck{residual <= tol, residual};
}

} // namespace beltsync::optics
