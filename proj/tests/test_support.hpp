#pragma once

// Shared fixtures for the test suite: spec builders with the usual
// one-active-viscosity defaults, a fixed-step RK4 reference integrator, and
// composite Simpson quadrature.  The RK4 and Simpson routines are written
// from scratch on purpose: they are the independent oracles the adaptive
// integrator and the quadrature in the library are judged against.

#include <cassert>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "elf/integrator.hpp"
#include "elf/model.hpp"

namespace elf_test {

// Spec with zero drifts, alpha = 1, and the viscosity slot matching the
// system (kappa1 for A and P, kappa2 for the B variants).
inline elf::EmdenSpec make_spec(elf::SystemKind system, int n, double theta,
                                double xi, std::vector<double> a0,
                                std::vector<double> a1) {
    elf::EmdenSpec s;
    s.system = system;
    s.dimension = n;
    s.theta = theta;
    s.xi = xi;
    if (system == elf::SystemKind::A || system == elf::SystemKind::P)
        s.kappa1 = 1.0;
    else
        s.kappa2 = 1.0;
    s.alpha = 1.0;
    s.drifts.assign(static_cast<std::size_t>(n), 0.0);
    s.a0 = std::move(a0);
    s.a1 = std::move(a1);
    return s;
}

// Classical fixed-step RK4 endpoint state (a_1..a_N, adot_1..adot_N).
// Asserts that every stage stays inside the domain, so it is only usable on
// problems known not to collapse before t_end.
inline std::vector<double> rk4_endpoint(const elf::EmdenSpec& spec,
                                        double t_end, double dt) {
    const std::size_t m = 2 * static_cast<std::size_t>(spec.dimension);
    std::vector<double> y(m), k1(m), k2(m), k3(m), k4(m), tmp(m);
    for (int i = 0; i < spec.dimension; ++i) {
        y[static_cast<std::size_t>(i)] = spec.a0[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(spec.dimension + i)] =
            spec.a1[static_cast<std::size_t>(i)];
    }
    const long steps = std::lround(t_end / dt);
    double t = 0.0;
    for (long s = 0; s < steps; ++s) {
        const double h = (s == steps - 1) ? t_end - t : dt;
        bool ok = elf::rhs_flat(spec, y, k1);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        ok = ok && elf::rhs_flat(spec, tmp, k2);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        ok = ok && elf::rhs_flat(spec, tmp, k3);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + h * k3[i];
        ok = ok && elf::rhs_flat(spec, tmp, k4);
        assert(ok);
        (void)ok;
        for (std::size_t i = 0; i < m; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += h;
    }
    return y;
}

// Composite Simpson rule with `intervals` subintervals (rounded up to even).
inline double simpson(const std::function<double(double)>& g, double a,
                      double b, int intervals) {
    if (intervals % 2 != 0) ++intervals;
    const double h = (b - a) / intervals;
    double sum = g(a) + g(b);
    for (int i = 1; i < intervals; ++i)
        sum += g(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

inline double rel_diff(double got, double want) {
    const double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

} // namespace elf_test
