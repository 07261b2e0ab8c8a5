#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hdexp {

struct QuadratureRule {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Laguerre rule for int_0^inf e^{-x} f(x) dx (Newton on L_n with the
// usual asymptotic starting guesses).
inline QuadratureRule gauss_laguerre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_laguerre: n < 1");
    QuadratureRule r;
    r.x.assign(static_cast<std::size_t>(n), 0.0);
    r.w.assign(static_cast<std::size_t>(n), 0.0);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i == 0) z = 3.0 / (1.0 + 2.4 * n);
        else if (i == 1) z += 15.0 / (1.0 + 2.5 * n);
        else {
            double ai = i - 1;
            z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - r.x[static_cast<std::size_t>(i - 2)]);
        }
        double p1 = 1.0, p2 = 0.0, pp = 1.0;
        for (int it = 0; it < 100; ++it) {
            p1 = 1.0;
            p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1 - z) * p2 - j * p3) / (j + 1);
            }
            pp = n * (p1 - p2) / z;
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::abs(z)) break;
        }
        // recompute L_{n-1} at the converged root for the weight
        p1 = 1.0;
        p2 = 0.0;
        for (int j = 0; j < n; ++j) {
            double p3 = p2;
            p2 = p1;
            p1 = ((2 * j + 1 - z) * p2 - j * p3) / (j + 1);
        }
        pp = n * (p1 - p2) / z;
        r.x[static_cast<std::size_t>(i)] = z;
        r.w[static_cast<std::size_t>(i)] = -1.0 / (pp * n * p2);
    }
    return r;
}

// Gauss-Legendre rule on [0, 1].
inline QuadratureRule gauss_legendre01(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre01: n < 1");
    QuadratureRule r;
    r.x.resize(static_cast<std::size_t>(n));
    r.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-16) break;
        }
        r.x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        r.w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

}  // namespace hdexp
