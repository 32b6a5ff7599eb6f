#pragma once

namespace beltsync::detail {

// Kahan compensated accumulator.
struct Kahan {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    double total() const { return sum; }
};

} // namespace beltsync::detail
