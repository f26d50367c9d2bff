#ifndef BICONSERVE_SPLINE_HPP
#define BICONSERVE_SPLINE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "biconserve/errors.hpp"

namespace biconserve {

/// Monotone cubic Hermite interpolant (Fritsch-Carlson limiter). Used for
/// inverse coordinate maps, where monotonicity of the data must survive
/// interpolation.
class Pchip {
  public:
    Pchip(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw GridError("Pchip: need matching n >= 2");
        m_.resize(n);
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
                m_[i] = 0.0;
            } else {
                const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
                const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
                m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
    }

    double operator()(double x) const {
        const std::size_t i = interval(x);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
               (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
    }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

  private:
    std::size_t interval(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - x_.begin());
        if (i == 0) return 0;
        if (i >= x_.size()) return x_.size() - 2;
        return i - 1;
    }

    std::vector<double> x_, y_, m_;
};

/// Cumulative integral of samples y(x) on a strictly increasing grid by
/// derivative-corrected trapezoids (4th order for smooth integrands).
/// Returns C with C[0] = 0 and C[i] = integral from x[0] to x[i].
inline std::vector<double> cumulative_integral(const std::vector<double>& x,
                                               const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw GridError("cumulative_integral: bad input");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0)
            d[i] = n > 2 ? (-3 * y[0] + 4 * y[1] - y[2]) / (x[2] - x[0])
                         : (y[1] - y[0]) / (x[1] - x[0]);
        else if (i == n - 1)
            d[i] = n > 2 ? (3 * y[n - 1] - 4 * y[n - 2] + y[n - 3]) / (x[n - 1] - x[n - 3])
                         : (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
        else
            d[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
    }
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = x[i + 1] - x[i];
        c[i + 1] = c[i] + 0.5 * h * (y[i] + y[i + 1]) + h * h / 12.0 * (d[i] - d[i + 1]);
    }
    return c;
}

/// Clamped B-spline basis of degree 3 or 5 on a strictly increasing node
/// vector. The first four control coefficients determine value and first
/// three derivatives at the left end (lower-triangular relation), which is
/// what the collocation solver uses to pin initial data.
class BSplineBasis {
  public:
    static constexpr int kMaxDegree = 5;

    explicit BSplineBasis(const std::vector<double>& nodes, int degree = 3)
        : degree_(degree) {
        if (nodes.size() < 2) throw GridError("BSplineBasis: need >= 2 nodes");
        if (degree < 3 || degree > kMaxDegree)
            throw GridError("BSplineBasis: degree must be in [3, 5]");
        const std::size_t n = nodes.size();
        knots_.assign(static_cast<std::size_t>(degree + 1), nodes.front());
        for (std::size_t i = 1; i + 1 < n; ++i) knots_.push_back(nodes[i]);
        knots_.insert(knots_.end(), static_cast<std::size_t>(degree + 1), nodes.back());
        num_basis_ = knots_.size() - static_cast<std::size_t>(degree) - 1;
    }

    int degree() const { return degree_; }
    std::size_t num_basis() const { return num_basis_; }
    double x_min() const { return knots_.front(); }
    double x_max() const { return knots_.back(); }

    /// Non-zero basis functions and derivatives at x: val[d][j] is the d-th
    /// derivative (d <= 3) of basis function (first + j), j <= degree.
    void basis(double x, std::size_t& first, double val[4][kMaxDegree + 1]) const {
        const std::size_t span = find_span(x);
        ders_basis(span, x, val);
        first = span - static_cast<std::size_t>(degree_);
    }

    double eval(const std::vector<double>& coef, double x, int der = 0) const {
        std::size_t first;
        double nd[4][kMaxDegree + 1];
        basis(x, first, nd);
        // Derivative rows sum to zero exactly, so shifting by a local
        // reference coefficient removes the cancellation error that would
        // otherwise scale like eps * |coef| / h^der.
        const double ref = der > 0 ? coef[first] : 0.0;
        double acc = 0.0;
        for (int j = 0; j <= degree_; ++j)
            acc += (coef[first + static_cast<std::size_t>(j)] - ref) * nd[der][j];
        return acc;
    }

    /// First four control coefficients matching prescribed value and first
    /// three derivatives at the left end.
    std::array<double, 4> pin_left(double v0, double d1, double d2, double d3) const {
        double nd[4][kMaxDegree + 1];
        std::size_t first;
        basis(x_min(), first, nd);
        const double want[4] = {v0, d1, d2, d3};
        std::array<double, 4> out{};
        for (std::size_t d = 0; d < 4; ++d) {
            double acc = want[d];
            for (std::size_t j = 0; j < d; ++j) acc -= nd[d][j] * out[j];
            if (nd[d][d] == 0.0) throw GridError("BSplineBasis: degenerate left end");
            out[d] = acc / nd[d][d];
        }
        return out;
    }

    /// Third derivative at x; cubic splines have one-sided limits at the
    /// knots, reported as their mean. Quintic splines are C^4, so the plain
    /// value is returned.
    double deriv3_avg(const std::vector<double>& coef, double x) const {
        if (degree_ >= 4) return eval(coef, x, 3);
        const double lo = x_min(), hi = x_max();
        const double eps = 1e-9 * (hi - lo);
        const double xl = std::max(lo, x - eps), xr = std::min(hi, x + eps);
        return 0.5 * (eval(coef, xl, 3) + eval(coef, xr, 3));
    }

    /// Greville abscissa of basis function j.
    double greville(std::size_t j) const {
        double acc = 0.0;
        for (int t = 1; t <= degree_; ++t) acc += knots_[j + static_cast<std::size_t>(t)];
        return acc / degree_;
    }

  private:
    std::size_t find_span(double x) const {
        const std::size_t n = num_basis_;
        const std::size_t pd = static_cast<std::size_t>(degree_);
        if (x >= knots_[n]) return n - 1; // last span closed on the right
        if (x <= knots_[pd]) return pd;
        auto it = std::upper_bound(knots_.begin() + static_cast<long>(pd),
                                   knots_.begin() + static_cast<long>(n), x);
        return static_cast<std::size_t>(it - knots_.begin()) - 1;
    }

    // Derivatives of the non-vanishing basis functions (NURBS book A2.3),
    // derivatives up to order 3.
    void ders_basis(std::size_t span, double x, double ders[4][kMaxDegree + 1]) const {
        const int p = degree_;
        double ndu[kMaxDegree + 1][kMaxDegree + 1];
        double left[kMaxDegree + 1], right[kMaxDegree + 1];
        ndu[0][0] = 1.0;
        for (int j = 1; j <= p; ++j) {
            left[j] = x - knots_[span + 1 - static_cast<std::size_t>(j)];
            right[j] = knots_[span + static_cast<std::size_t>(j)] - x;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                ndu[j][r] = right[r + 1] + left[j - r];
                const double temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        for (int d = 0; d <= 3; ++d)
            for (int j = 0; j <= p; ++j) ders[d][j] = 0.0;
        for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

        const int nders = std::min(3, p);
        double a[2][kMaxDegree + 1];
        for (int r = 0; r <= p; ++r) {
            int s1 = 0, s2 = 1;
            a[0][0] = 1.0;
            for (int k = 1; k <= nders; ++k) {
                double dv = 0.0;
                const int rk = r - k, pk = p - k;
                if (r >= k) {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    dv = a[s2][0] * ndu[rk][pk];
                }
                const int j1 = (rk >= -1) ? 1 : -rk;
                const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
                for (int j = j1; j <= j2; ++j) {
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                    dv += a[s2][j] * ndu[rk + j][pk];
                }
                if (r <= pk) {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    dv += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = dv;
                std::swap(s1, s2);
            }
        }
        double rr = p;
        for (int k = 1; k <= nders; ++k) {
            for (int j = 0; j <= p; ++j) ders[k][j] *= rr;
            rr *= (p - k);
        }
    }

    int degree_;
    std::vector<double> knots_;
    std::size_t num_basis_;
};

using CubicBSpline = BSplineBasis;

} // namespace biconserve

#endif
