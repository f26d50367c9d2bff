#ifndef BICONSERVE_STENCILS_HPP
#define BICONSERVE_STENCILS_HPP

#include <cstddef>
#include <vector>

#include "biconserve/field.hpp"

namespace biconserve {

// Second-order stencils: central in the interior, one-sided at the two
// boundary points. Callers that need clean convergence statistics exclude
// the boundary layers (field_stats margin = 2).

inline double d1_at(const std::vector<double>& v, std::size_t i, double h) {
    const std::size_t n = v.size();
    if (i == 0) return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    if (i == n - 1) return (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    return (v[i + 1] - v[i - 1]) / (2.0 * h);
}

inline double d2_at(const std::vector<double>& v, std::size_t i, double h) {
    const std::size_t n = v.size();
    if (i == 0) return (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h);
    if (i == n - 1)
        return (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / (h * h);
    return (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
}

inline std::vector<double> d1_vec(const std::vector<double>& v, double h) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = d1_at(v, i, h);
    return out;
}

/// 4th-order first-derivative stencil as an explicit linear functional:
/// five node indices and weights. Skewed 5-point stencils near the ends.
struct Stencil5 {
    std::size_t idx[5];
    double w[5];
};

inline Stencil5 d1_stencil4(std::size_t n, std::size_t i, double h) {
    Stencil5 st;
    if (i <= 1) {
        for (std::size_t t = 0; t < 5; ++t) st.idx[t] = t;
        if (i == 0) {
            const double w[5] = {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25};
            for (std::size_t t = 0; t < 5; ++t) st.w[t] = w[t] / h;
        } else {
            const double w[5] = {-0.25, -5.0 / 6, 1.5, -0.5, 1.0 / 12};
            for (std::size_t t = 0; t < 5; ++t) st.w[t] = w[t] / h;
        }
    } else if (i >= n - 2) {
        for (std::size_t t = 0; t < 5; ++t) st.idx[t] = n - 5 + t;
        if (i == n - 1) {
            const double w[5] = {0.25, -4.0 / 3, 3.0, -4.0, 25.0 / 12};
            for (std::size_t t = 0; t < 5; ++t) st.w[t] = w[t] / h;
        } else {
            const double w[5] = {-1.0 / 12, 0.5, -1.5, 5.0 / 6, 0.25};
            for (std::size_t t = 0; t < 5; ++t) st.w[t] = w[t] / h;
        }
    } else {
        for (std::size_t t = 0; t < 5; ++t) st.idx[t] = i - 2 + t;
        const double w[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
        for (std::size_t t = 0; t < 5; ++t) st.w[t] = w[t] / h;
    }
    return st;
}

/// 4th-order first derivative (5-point stencils, skewed near the ends).
/// Used where a single differencing level must not dominate the residual.
inline double d1_at4(const std::vector<double>& v, std::size_t i, double h) {
    const std::size_t n = v.size();
    if (n < 5) return d1_at(v, i, h);
    const Stencil5 st = d1_stencil4(n, i, h);
    double acc = 0.0;
    for (std::size_t t = 0; t < 5; ++t) acc += st.w[t] * v[st.idx[t]];
    return acc;
}

inline std::vector<double> d2_vec(const std::vector<double>& v, double h) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = d2_at(v, i, h);
    return out;
}

namespace detail {
inline double d1_line(const double* v, std::size_t i, std::size_t n,
                      std::size_t stride, double h) {
    if (i == 0)
        return (-3.0 * v[0] + 4.0 * v[stride] - v[2 * stride]) / (2.0 * h);
    if (i == n - 1)
        return (3.0 * v[(n - 1) * stride] - 4.0 * v[(n - 2) * stride] +
                v[(n - 3) * stride]) / (2.0 * h);
    return (v[(i + 1) * stride] - v[(i - 1) * stride]) / (2.0 * h);
}

inline double d2_line(const double* v, std::size_t i, std::size_t n,
                      std::size_t stride, double h) {
    if (i == 0)
        return (2.0 * v[0] - 5.0 * v[stride] + 4.0 * v[2 * stride] -
                v[3 * stride]) / (h * h);
    if (i == n - 1)
        return (2.0 * v[(n - 1) * stride] - 5.0 * v[(n - 2) * stride] +
                4.0 * v[(n - 3) * stride] - v[(n - 4) * stride]) / (h * h);
    return (v[(i + 1) * stride] - 2.0 * v[i * stride] + v[(i - 1) * stride]) / (h * h);
}
} // namespace detail

/// d/du of a field, second order.
inline ScalarField diff_u(const ScalarField& f) {
    ScalarField out(f.grid);
    const std::size_t nu = f.nu(), ns = f.ns();
    if (nu < 3) throw GridError("diff_u: need at least 3 u-samples");
    for (std::size_t j = 0; j < ns; ++j) {
        const double* col = f.v.data() + j;
        for (std::size_t i = 0; i < nu; ++i)
            out.at(i, j) = detail::d1_line(col, i, nu, ns, f.grid->hu());
    }
    return out;
}

/// d/ds of a field, second order.
inline ScalarField diff_s(const ScalarField& f) {
    ScalarField out(f.grid);
    const std::size_t nu = f.nu(), ns = f.ns();
    if (ns < 3) throw GridError("diff_s: need at least 3 s-samples");
    for (std::size_t i = 0; i < nu; ++i) {
        const double* row = f.v.data() + i * ns;
        for (std::size_t j = 0; j < ns; ++j)
            out.at(i, j) = detail::d1_line(row, j, ns, 1, f.grid->hs());
    }
    return out;
}

inline ScalarField diff_uu(const ScalarField& f) {
    ScalarField out(f.grid);
    const std::size_t nu = f.nu(), ns = f.ns();
    if (nu < 4) throw GridError("diff_uu: need at least 4 u-samples");
    for (std::size_t j = 0; j < ns; ++j) {
        const double* col = f.v.data() + j;
        for (std::size_t i = 0; i < nu; ++i)
            out.at(i, j) = detail::d2_line(col, i, nu, ns, f.grid->hu());
    }
    return out;
}

inline ScalarField diff_ss(const ScalarField& f) {
    ScalarField out(f.grid);
    const std::size_t nu = f.nu(), ns = f.ns();
    if (ns < 4) throw GridError("diff_ss: need at least 4 s-samples");
    for (std::size_t i = 0; i < nu; ++i) {
        const double* row = f.v.data() + i * ns;
        for (std::size_t j = 0; j < ns; ++j)
            out.at(i, j) = detail::d2_line(row, j, ns, 1, f.grid->hs());
    }
    return out;
}

inline ScalarField diff_us(const ScalarField& f) { return diff_s(diff_u(f)); }

} // namespace biconserve

#endif
