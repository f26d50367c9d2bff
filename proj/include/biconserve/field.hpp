#ifndef BICONSERVE_FIELD_HPP
#define BICONSERVE_FIELD_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "biconserve/errors.hpp"

namespace biconserve {

/// Rectangular (u,s) grid. Spacings are taken from the first interval;
/// all stencil code assumes uniform spacing per axis.
class Grid2D {
  public:
    Grid2D(std::vector<double> u, std::vector<double> s)
        : u_(std::move(u)), s_(std::move(s)) {
        if (u_.size() < 2 || s_.size() < 2)
            throw GridError("Grid2D: need at least 2 samples per axis");
        hu_ = u_[1] - u_[0];
        hs_ = s_[1] - s_[0];
    }

    static Grid2D uniform(double u0, double u1, std::size_t nu,
                          double s0, double s1, std::size_t ns) {
        std::vector<double> u(nu), s(ns);
        for (std::size_t i = 0; i < nu; ++i)
            u[i] = u0 + (u1 - u0) * static_cast<double>(i) / static_cast<double>(nu - 1);
        for (std::size_t j = 0; j < ns; ++j)
            s[j] = s0 + (s1 - s0) * static_cast<double>(j) / static_cast<double>(ns - 1);
        return Grid2D(std::move(u), std::move(s));
    }

    std::size_t nu() const { return u_.size(); }
    std::size_t ns() const { return s_.size(); }
    std::size_t size() const { return u_.size() * s_.size(); }
    double u(std::size_t i) const { return u_[i]; }
    double s(std::size_t j) const { return s_[j]; }
    const std::vector<double>& u_nodes() const { return u_; }
    const std::vector<double>& s_nodes() const { return s_; }
    double hu() const { return hu_; }
    double hs() const { return hs_; }
    std::size_t index(std::size_t i, std::size_t j) const { return i * s_.size() + j; }

  private:
    std::vector<double> u_, s_;
    double hu_, hs_;
};

using GridPtr = std::shared_ptr<const Grid2D>;

inline GridPtr make_grid(double u0, double u1, std::size_t nu,
                         double s0, double s1, std::size_t ns) {
    return std::make_shared<const Grid2D>(Grid2D::uniform(u0, u1, nu, s0, s1, ns));
}

/// Real-valued function sampled on a Grid2D, row-major in u.
struct ScalarField {
    GridPtr grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(GridPtr g, double fill = 0.0)
        : grid(std::move(g)), v(grid->size(), fill) {}

    double& at(std::size_t i, std::size_t j) { return v[grid->index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return v[grid->index(i, j)]; }
    std::size_t nu() const { return grid->nu(); }
    std::size_t ns() const { return grid->ns(); }
};

/// Build a field from f(u,s).
template <class F>
ScalarField make_field(const GridPtr& g, F f) {
    ScalarField out(g);
    for (std::size_t i = 0; i < g->nu(); ++i)
        for (std::size_t j = 0; j < g->ns(); ++j)
            out.at(i, j) = f(g->u(i), g->s(j));
    return out;
}

struct FieldStats {
    double max_abs = 0.0;
    double l2 = 0.0; // root mean square over the included points
    std::size_t argmax_i = 0, argmax_j = 0;
    std::size_t count = 0;
};

/// Max/L2 statistics over grid points at least `margin` cells away from
/// every boundary. One-sided stencil layers are excluded from pass/fail
/// statistics by calling this with margin = 2.
inline FieldStats field_stats(const ScalarField& f, std::size_t margin = 0) {
    FieldStats st;
    const std::size_t nu = f.nu(), ns = f.ns();
    if (nu <= 2 * margin || ns <= 2 * margin) return st;
    double sumsq = 0.0;
    for (std::size_t i = margin; i < nu - margin; ++i) {
        for (std::size_t j = margin; j < ns - margin; ++j) {
            const double a = std::abs(f.at(i, j));
            sumsq += a * a;
            ++st.count;
            if (a > st.max_abs) {
                st.max_abs = a;
                st.argmax_i = i;
                st.argmax_j = j;
            }
        }
    }
    st.l2 = std::sqrt(sumsq / static_cast<double>(st.count));
    return st;
}

inline FieldStats vector_stats(const std::vector<double>& v, std::size_t margin = 0) {
    FieldStats st;
    if (v.size() <= 2 * margin) return st;
    double sumsq = 0.0;
    for (std::size_t i = margin; i < v.size() - margin; ++i) {
        const double a = std::abs(v[i]);
        sumsq += a * a;
        ++st.count;
        if (a > st.max_abs) {
            st.max_abs = a;
            st.argmax_i = i;
        }
    }
    st.l2 = std::sqrt(sumsq / static_cast<double>(st.count));
    return st;
}

} // namespace biconserve

#endif
