#ifndef BICONSERVE_ERRORS_HPP
#define BICONSERVE_ERRORS_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace biconserve {

// Inputs left the admissible region (c - K <= eps_dom, K' <= eps_dom, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Grid/profile shapes disagree, or a grid is too small for the stencil.
struct GridError : std::runtime_error {
    explicit GridError(const std::string& what) : std::runtime_error(what) {}
};

// Initial data fail the feasibility inequality, or c - K_r <= eps_dom
// appeared at listed samples.
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solver did not reach its tolerance. Carries the best
// residual seen so the caller can report it.
struct SolveError : std::runtime_error {
    SolveError(const std::string& what, double best_residual_)
        : std::runtime_error(what), best_residual(best_residual_) {}
    double best_residual;
};

// Configuration file / flag validation failure. The field path names the
// offending entry.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& field_, const std::string& what)
        : std::runtime_error(field_ + ": " + what), field(field_) {}
    std::string field;
};

// Exclusion margin around the singular sets c - K = 0 and K' = 0.
inline double eps_dom(double c, double k) {
    double m = 1.0;
    if (std::abs(c) > m) m = std::abs(c);
    if (std::abs(k) > m) m = std::abs(k);
    return 1e-6 * m;
}

} // namespace biconserve

#endif
