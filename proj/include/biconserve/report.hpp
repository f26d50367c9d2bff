#ifndef BICONSERVE_REPORT_HPP
#define BICONSERVE_REPORT_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "biconserve/field.hpp"

namespace biconserve {

struct GridMeta {
    std::size_t nu = 0, ns = 0;
    double hu = 0.0, hs = 0.0;
};

inline GridMeta grid_meta(const Grid2D& g) {
    return {g.nu(), g.ns(), g.hu(), g.hs()};
}

/// Residual/convergence summary of one verification check. Statistics are
/// taken over interior points (boundary stencil layers of width 2 are
/// reported separately under details["boundary_max"]).
struct Report {
    std::string name;
    double max_residual = 0.0;
    double l2_residual = 0.0;
    double max_at_u = 0.0, max_at_s = 0.0;
    GridMeta grid;
    double tolerance = 0.0;
    bool passed = false;
    double wall_time_s = 0.0; // serialized to the run metadata file only
    std::map<std::string, double> details;
    std::vector<std::string> notes;
};

/// Fill residual statistics of `field` into a report (interior margin 2).
inline void fill_stats(Report& rep, const ScalarField& field) {
    const FieldStats interior = field_stats(field, 2);
    const FieldStats full = field_stats(field, 0);
    rep.max_residual = interior.max_abs;
    rep.l2_residual = interior.l2;
    rep.max_at_u = field.grid->u(interior.argmax_i);
    rep.max_at_s = field.grid->s(interior.argmax_j);
    rep.grid = grid_meta(*field.grid);
    rep.details["boundary_max"] = full.max_abs;
}

inline nlohmann::json to_json(const Report& rep) {
    nlohmann::json j;
    j["name"] = rep.name;
    j["max_residual"] = rep.max_residual;
    j["l2_residual"] = rep.l2_residual;
    j["max_location"] = {{"u", rep.max_at_u}, {"s", rep.max_at_s}};
    j["grid"] = {{"nu", rep.grid.nu}, {"ns", rep.grid.ns},
                 {"hu", rep.grid.hu}, {"hs", rep.grid.hs}};
    j["tolerance"] = rep.tolerance;
    j["passed"] = rep.passed;
    if (!rep.details.empty()) j["details"] = rep.details;
    if (!rep.notes.empty()) j["notes"] = rep.notes;
    return j;
}

/// Result of one Ricci-condition check (Prop 3.1 / Prop 3.2 form i-iv).
struct RicciReport {
    std::string condition; // e.g. "biconservative.ii"
    ScalarField residual;
    double max_residual = 0.0;
    double l2_residual = 0.0;
    GridMeta grid;
    double tolerance = 0.0;
    bool passed = false;
};

inline nlohmann::json to_json(const RicciReport& rep) {
    nlohmann::json j;
    j["condition"] = rep.condition;
    j["max_residual"] = rep.max_residual;
    j["l2_residual"] = rep.l2_residual;
    j["grid"] = {{"nu", rep.grid.nu}, {"ns", rep.grid.ns},
                 {"hu", rep.grid.hu}, {"hs", rep.grid.hs}};
    j["passed"] = rep.passed;
    j["tolerance"] = rep.tolerance;
    return j;
}

} // namespace biconserve

#endif
