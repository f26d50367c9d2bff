#ifndef BICONSERVE_PIPELINE_HPP
#define BICONSERVE_PIPELINE_HPP

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "biconserve/conformal.hpp"
#include "biconserve/embedding.hpp"
#include "biconserve/errors.hpp"
#include "biconserve/flattener.hpp"
#include "biconserve/io.hpp"
#include "biconserve/metric.hpp"
#include "biconserve/profile.hpp"
#include "biconserve/report.hpp"

namespace biconserve {

inline bool log_enabled() {
    static const bool on = [] {
        const char* v = std::getenv("BICONSERVE_LOG");
        return v != nullptr && std::string(v) != "" && std::string(v) != "0" &&
               std::string(v) != "quiet";
    }();
    return on;
}

inline void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[biconserve] " << msg << "\n";
}

static const std::vector<std::string> kStageOrder = {"profile", "metric", "conformal",
                                                     "embedding", "flattener"};

/// Fully deterministic run description; defaults reproduce the desk-scale
/// verification run.
struct RunConfig {
    double c = 0.0;
    double k0 = -1.0;
    double kprime0 = 1.0;
    double u0 = 0.0;
    double u1 = 0.15;
    double s_extent = 1.0;
    std::size_t nu = 201;
    std::size_t ns = 201;
    double ode_tol = 1e-12;
    double flat_tol = 1e-3;   // relative flatness tolerance at h = 1e-2
    double solver_tol = 1e-8; // flattener shooting residual control
    double r0 = 0.5, r0p = 0.0, r0pp = 0.0, r0ppp = 0.0;
    std::set<std::string> stages{kStageOrder.begin(), kStageOrder.end()};
    std::string out_dir = "out";
    bool plots = false;

    void validate() const {
        if (!(c - k0 > 0.0)) throw ConfigError("k0", "c - k0 <= 0");
        if (!(kprime0 > 0.0)) throw ConfigError("kprime0", "kprime0 <= 0");
        if (!(u1 >= u0)) throw ConfigError("u_span", "u1 < u0");
        if (nu < 5) throw ConfigError("nu", "nu >= 5 required");
        if (ns < 5) throw ConfigError("ns", "ns >= 5 required");
        if (!(s_extent > 0.0)) throw ConfigError("s_extent", "s_extent <= 0");
        if (!(ode_tol > 0.0)) throw ConfigError("ode_tol", "ode_tol <= 0");
        if (!(flat_tol > 0.0)) throw ConfigError("flat_tol", "flat_tol <= 0");
        if (!(solver_tol > 0.0)) throw ConfigError("solver_tol", "solver_tol <= 0");
        for (const std::string& st : stages) {
            bool known = false;
            for (const std::string& k : kStageOrder) known = known || st == k;
            if (!known) throw ConfigError("stages", "unknown stage: " + st);
        }
    }
};

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    const auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("c", cfg.c);
    get("k0", cfg.k0);
    get("kprime0", cfg.kprime0);
    if (j.contains("u_span")) {
        const auto& span = j.at("u_span");
        if (!span.is_array() || span.size() != 2)
            throw ConfigError("u_span", "expected [u0, u1]");
        cfg.u0 = span[0].get<double>();
        cfg.u1 = span[1].get<double>();
    }
    get("s_extent", cfg.s_extent);
    get("nu", cfg.nu);
    get("ns", cfg.ns);
    get("ode_tol", cfg.ode_tol);
    get("flat_tol", cfg.flat_tol);
    get("solver_tol", cfg.solver_tol);
    get("r0", cfg.r0);
    get("r0p", cfg.r0p);
    get("r0pp", cfg.r0pp);
    get("r0ppp", cfg.r0ppp);
    get("out_dir", cfg.out_dir);
    get("plots", cfg.plots);
    if (j.contains("stages")) {
        cfg.stages.clear();
        for (const auto& s : j.at("stages")) cfg.stages.insert(s.get<std::string>());
    }
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["c"] = cfg.c;
    j["k0"] = cfg.k0;
    j["kprime0"] = cfg.kprime0;
    j["u_span"] = {cfg.u0, cfg.u1};
    j["s_extent"] = cfg.s_extent;
    j["nu"] = cfg.nu;
    j["ns"] = cfg.ns;
    j["ode_tol"] = cfg.ode_tol;
    j["flat_tol"] = cfg.flat_tol;
    j["solver_tol"] = cfg.solver_tol;
    j["r0"] = cfg.r0;
    j["r0p"] = cfg.r0p;
    j["r0pp"] = cfg.r0pp;
    j["r0ppp"] = cfg.r0ppp;
    j["stages"] = cfg.stages;
    j["out_dir"] = cfg.out_dir;
    j["plots"] = cfg.plots;
    return j;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config", "cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return RunConfig{};
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

struct PipelineResult {
    std::vector<Report> reports;
    int exit_code = 0; // 0 pass, 1 check failure, 2 config error, 3 numerical failure
};

namespace detail {

struct StageTimer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

inline Report profile_stage(const RunConfig& cfg, CurvatureProfile& prof) {
    prof = integrate_profile(cfg.c, cfg.k0, cfg.kprime0, cfg.u0, cfg.u1, cfg.ode_tol,
                             cfg.nu);
    const std::vector<double> res = pde_residual(prof);
    const FieldStats st = vector_stats(res);
    Report rep;
    rep.name = "profile";
    rep.max_residual = st.max_abs;
    rep.l2_residual = st.l2;
    rep.max_at_u = prof.u[st.argmax_i];
    rep.tolerance = 1e-7;
    rep.grid = {prof.size(), 1, prof.size() > 1 ? prof.u[1] - prof.u[0] : 0.0, 0.0};
    rep.details["span"] = prof.span();
    rep.details["truncated"] = prof.truncated ? 1.0 : 0.0;
    double cmk_min = std::numeric_limits<double>::infinity();
    double kp_min = cmk_min;
    for (std::size_t i = 0; i < prof.size(); ++i) {
        cmk_min = std::min(cmk_min, prof.c - prof.k[i]);
        kp_min = std::min(kp_min, prof.kp[i]);
    }
    rep.details["min_c_minus_K"] = cmk_min;
    rep.details["min_Kprime"] = kp_min;
    rep.passed = rep.max_residual < rep.tolerance;
    if (prof.truncated)
        rep.notes.push_back("span truncated at the admissibility margin before u1");
    return rep;
}

inline Report metric_stage(const RunConfig& cfg, const CurvatureProfile& prof,
                           MetricGrid& metric) {
    std::vector<double> s_nodes(cfg.ns);
    for (std::size_t j = 0; j < cfg.ns; ++j)
        s_nodes[j] = -cfg.s_extent +
                     2.0 * cfg.s_extent * static_cast<double>(j) /
                         static_cast<double>(cfg.ns - 1);
    metric = build_metric(prof, s_nodes);

    Report rep;
    rep.name = "metric";
    const double h_eff = std::max(metric.grid->hu(), metric.grid->hs());

    // Converse round trip: discrete curvature against the generating K(u).
    const ScalarField kfd = gauss_curvature_fd(metric);
    ScalarField kerr(metric.grid);
    for (std::size_t i = 0; i < metric.nu(); ++i)
        for (std::size_t j = 0; j < metric.ns(); ++j)
            kerr.at(i, j) = kfd.at(i, j) - prof.k[i];
    rep.tolerance = refinement_tolerance(5e-3, h_eff);
    fill_stats(rep, kerr);
    rep.passed = rep.max_residual < rep.tolerance;

    // det g == 1 identically for theorem metrics.
    double det_gap = 0.0;
    for (std::size_t i = 0; i < metric.nu(); ++i)
        for (std::size_t j = 0; j < metric.ns(); ++j)
            det_gap = std::max(det_gap, std::abs(metric.det(i, j) - 1.0));
    rep.details["det_minus_one_max"] = det_gap;
    rep.passed = rep.passed && det_gap < 1e-12;

    // Circle condition: differenced kappa vs closed form, s-independence.
    const ScalarField kap = level_curve_curvature(metric);
    const std::vector<double> kap_cf = kappa_closed_form(prof);
    double gap = 0.0, s_indep = 0.0;
    for (std::size_t i = 0; i < metric.nu(); ++i)
        for (std::size_t j = 0; j < metric.ns(); ++j) {
            gap = std::max(gap, std::abs(kap.at(i, j) - kap_cf[i]));
            s_indep = std::max(s_indep, std::abs(kap.at(i, j) - kap.at(i, metric.ns() / 2)));
        }
    rep.details["kappa_gap"] = gap;
    rep.details["kappa_s_dependence"] = s_indep;
    rep.passed = rep.passed && gap < 1e-10 && s_indep < 1e-12;

    // Frame connection identities with the closed-form connection.
    const ConnectionData conn = christoffels_closed_form(metric, prof);
    const FrameConnectionResiduals fr = frame_connection_check(metric, prof, conn);
    const double frame_max =
        std::max({field_stats(fr.x1x1).max_abs, field_stats(fr.x1x2).max_abs,
                  field_stats(fr.x2x2).max_abs, field_stats(fr.x2x1).max_abs});
    const double ortho_max =
        std::max({field_stats(fr.frame_g11).max_abs, field_stats(fr.frame_g22).max_abs,
                  field_stats(fr.frame_g12).max_abs});
    rep.details["frame_connection_max"] = frame_max;
    rep.details["frame_orthonormality_max"] = ortho_max;
    rep.passed = rep.passed && frame_max < 1e-10 && ortho_max < 1e-12;

    // Orthogonal and isothermal charts reproduce the curvature.
    const MetricGrid ortho = to_orthogonal(metric, prof);
    const ScalarField k_ortho = gauss_curvature_fd(ortho);
    ScalarField oerr(ortho.grid);
    for (std::size_t i = 0; i < ortho.nu(); ++i)
        for (std::size_t j = 0; j < ortho.ns(); ++j)
            oerr.at(i, j) = k_ortho.at(i, j) - prof.k[i];
    const double ortho_err = field_stats(oerr, 2).max_abs;
    const IsothermalChart iso = to_isothermal(metric, prof, prof.u.front());
    const ScalarField k_iso = gauss_curvature_fd(iso.metric);
    ScalarField ierr(iso.metric.grid);
    for (std::size_t i = 0; i < iso.metric.nu(); ++i)
        for (std::size_t j = 0; j < iso.metric.ns(); ++j)
            ierr.at(i, j) = k_iso.at(i, j) - iso.k_of_ut[i];
    const double iso_err = field_stats(ierr, 2).max_abs;
    rep.details["orthogonal_chart_k_err"] = ortho_err;
    rep.details["isothermal_chart_k_err"] = iso_err;
    const double chart_tol = refinement_tolerance(5e-3, h_eff);
    rep.passed = rep.passed && ortho_err < chart_tol && iso_err < chart_tol;
    return rep;
}

inline Report conformal_stage(const RunConfig& cfg, const CurvatureProfile& prof,
                              const MetricGrid& metric) {
    Report rep;
    rep.name = "conformal";
    ScalarField k(metric.grid);
    for (std::size_t i = 0; i < metric.nu(); ++i)
        for (std::size_t j = 0; j < metric.ns(); ++j)
            k.at(i, j) = prof.k[i];

    double max_k = 0.0;
    for (double v : prof.k) max_k = std::max(max_k, std::abs(v));
    const double h_eff = std::max(metric.grid->hu(), metric.grid->hs());
    const double cond_tol = refinement_tolerance(1e-4 * max_k, h_eff) *
                            (cfg.flat_tol / 1e-3);
    const double flat_tol = refinement_tolerance(cfg.flat_tol * max_k, h_eff);

    const RicciReport r1 = ricci_condition(metric, k, cfg.c, RicciVariant::biconservative,
                                           RicciForm::i, cond_tol);
    const RicciReport r2 = ricci_condition(metric, k, cfg.c, RicciVariant::biconservative,
                                           RicciForm::ii, cond_tol);
    const RicciReport r3 = ricci_condition(metric, k, cfg.c, RicciVariant::biconservative,
                                           RicciForm::iii, flat_tol);
    rep.details["form_i_max"] = r1.max_residual;
    rep.details["form_ii_max"] = r2.max_residual;
    rep.details["form_iii_max"] = r3.max_residual;
    rep.details["form_i_tol"] = r1.tolerance;
    rep.details["form_iii_tol"] = r3.tolerance;
    bool all = r1.passed && r2.passed && r3.passed;

    rep.max_residual = r2.max_residual;
    rep.l2_residual = r2.l2_residual;
    rep.grid = r2.grid;
    rep.tolerance = r2.tolerance;

    if (cfg.c == 0.0) {
        const RicciReport r4 = ricci_condition(metric, k, cfg.c,
                                               RicciVariant::biconservative, RicciForm::iv,
                                               flat_tol);
        rep.details["form_iv_max"] = r4.max_residual;
        all = all && r4.passed;

        // The transform check stacks two discrete Laplacians; run it on an
        // isotropic desk-spaced u-subgrid so both levels see h ~ 1e-2.
        const double hu = metric.grid->hu();
        std::size_t stride = static_cast<std::size_t>(std::max(1.0, std::floor(1e-2 / hu)));
        while (stride > 1 && (prof.size() - 1) / stride + 1 < 9) --stride;
        CurvatureProfile sub;
        sub.c = prof.c;
        sub.requested_end = prof.requested_end;
        for (std::size_t i = 0; i < prof.size(); i += stride) {
            sub.u.push_back(prof.u[i]);
            sub.k.push_back(prof.k[i]);
            sub.kp.push_back(prof.kp[i]);
        }
        const MetricGrid msub = build_metric(sub, metric.grid->s_nodes());
        ScalarField ksub(msub.grid);
        for (std::size_t i = 0; i < msub.nu(); ++i)
            for (std::size_t j = 0; j < msub.ns(); ++j) ksub.at(i, j) = sub.k[i];
        const RicciTransformResult tr = ricci_transform(msub, ksub);
        rep.details["transform_precondition_max"] = tr.precondition.max_residual;
        rep.details["transform_ricci_ii_max"] = tr.ricci.max_residual;
        all = all && tr.precondition.passed && tr.ricci.passed;
    } else {
        rep.notes.push_back("ricci transform and form iv skipped (require c = 0)");
    }

    rep.passed = all;
    return rep;
}

inline Report embedding_stage(const RunConfig&, const CurvatureProfile& prof,
                              const MetricGrid& metric) {
    Report rep;
    rep.name = "embedding";
    const ShapeOperatorField sh = build_shape_operator(prof, metric);
    const Report gauss = gauss_equation_check(prof, sh);
    // codazzi tolerance is pinned at the default resolution hu = 7.5e-4 and
    // relaxes/tightens as O(hu^2)
    const double codazzi_tol = refinement_tolerance(1e-6, metric.grid->hu(), 7.5e-4);
    const Report codazzi = codazzi_check(prof, metric, sh, codazzi_tol);
    const Report bicons = biconservativity_check(prof, metric, sh);
    const Report tilded = frame_connection_tilded_check(prof, metric);

    double ratio_gap = 0.0;
    for (std::size_t idx = 0; idx < metric.grid->size(); ++idx)
        ratio_gap = std::max(ratio_gap,
                             std::abs(sh.lambda2.v[idx] / sh.lambda1.v[idx] + 3.0));

    rep.max_residual = codazzi.max_residual;
    rep.l2_residual = codazzi.l2_residual;
    rep.grid = codazzi.grid;
    rep.tolerance = codazzi.tolerance;
    rep.details["gauss_identity_max"] = gauss.max_residual;
    rep.details["codazzi_max"] = codazzi.max_residual;
    rep.details["biconservativity_max"] = bicons.max_residual;
    rep.details["tilded_identity_max"] = tilded.max_residual;
    rep.details["eigenvalue_ratio_gap"] = ratio_gap;
    rep.passed = gauss.passed && codazzi.passed && bicons.passed && tilded.passed &&
                 ratio_gap == 0.0;
    return rep;
}

inline Report flattener_stage(const RunConfig& cfg, const CurvatureProfile& prof,
                              const MetricGrid& metric, std::vector<TraceEntry>& trace,
                              std::optional<ExponentProfile>& solution) {
    Report rep;
    rep.name = "flattener";

    FlattenerOptions opt;
    opt.shooting_tol = cfg.solver_tol;

    const Feasibility feas = feasibility_check(prof, cfg.r0, cfg.r0p, cfg.r0pp);
    rep.details["feasibility_margin"] = feas.margin;
    if (!feas.feasible)
        throw InfeasibleError("flattener: initial data infeasible, margin = " +
                              std::to_string(feas.margin));

    const ExponentSolution shoot = solve_exponent(prof, cfg.r0, cfg.r0p, cfg.r0pp,
                                                  cfg.r0ppp, ExponentMethod::shooting, opt);

    // Collocation cross-validates on a desk-spaced subgrid: the spline's
    // left-end third-derivative evaluation carries eps/h^3 rounding noise,
    // which drowns the objective on grids much finer than h ~ 1e-2.
    const double hu = prof.u.size() > 1 ? prof.u[1] - prof.u[0] : 1.0;
    std::size_t stride = static_cast<std::size_t>(std::max(1.0, std::floor(1e-2 / hu)));
    while (stride > 1 && (prof.size() - 1) / stride + 1 < 9) --stride;
    CurvatureProfile sub;
    sub.c = prof.c;
    sub.requested_end = prof.requested_end;
    for (std::size_t i = 0; i < prof.size(); i += stride) {
        sub.u.push_back(prof.u[i]);
        sub.k.push_back(prof.k[i]);
        sub.kp.push_back(prof.kp[i]);
    }
    const ExponentSolution colloc = solve_exponent(sub, cfg.r0, cfg.r0p, cfg.r0pp,
                                                   cfg.r0ppp, ExponentMethod::collocation,
                                                   opt);
    trace = shoot.trace;
    trace.insert(trace.end(), colloc.trace.begin(), colloc.trace.end());

    double agree = 0.0;
    for (std::size_t t = 0; t < sub.size(); ++t)
        agree = std::max(agree, std::abs(shoot.rprof.r[t * stride] - colloc.rprof.r[t]));
    rep.details["method_agreement_max"] = agree;
    rep.details["shooting_point_residual"] = shoot.max_point_residual;
    rep.details["collocation_residual"] = colloc.max_point_residual;
    rep.details["degenerate_samples"] = static_cast<double>(shoot.degenerate_samples);

    const std::vector<double> res = flatten_residual(prof, shoot.rprof);
    rep.details["grid_residual_max"] = vector_stats(res, 2).max_abs;

    const Report flat = verify_flat(prof, shoot.rprof, metric.grid->s_nodes());
    rep.max_residual = flat.max_residual;
    rep.l2_residual = flat.l2_residual;
    rep.grid = flat.grid;
    rep.tolerance = flat.tolerance;
    rep.details["verify_flat_max"] = flat.max_residual;

    if (cfg.c == 0.0) {
        double r_gap = 0.0;
        for (double r : shoot.rprof.r) r_gap = std::max(r_gap, std::abs(r - 0.5));
        rep.details["max_r_minus_half"] = r_gap;
    }

    solution = shoot.rprof;
    rep.passed = flat.passed && agree < 10.0 * opt.collocation_tol;
    return rep;
}

} // namespace detail

/// Executes the enabled stages in dependency order, writes the artifact
/// bundle to cfg.out_dir and returns the reports with the exit code.
/// Timing goes to run_meta.json so reports.json stays byte-deterministic.
inline PipelineResult run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    if (cfg.plots) fs::create_directories(cfg.out_dir + "/plots");

    // A requested stage pulls in its prerequisites.
    std::set<std::string> enabled = cfg.stages;
    if (enabled.count("metric") || enabled.count("conformal") ||
        enabled.count("embedding") || enabled.count("flattener"))
        enabled.insert("profile");
    if (enabled.count("conformal") || enabled.count("embedding") ||
        enabled.count("flattener"))
        enabled.insert("metric");

    PipelineResult result;
    std::ofstream(cfg.out_dir + "/config_resolved.json") << config_to_json(cfg).dump(2)
                                                         << "\n";
    nlohmann::json meta;
    meta["stages"] = nlohmann::json::object();

    CurvatureProfile prof;
    MetricGrid metric;
    std::vector<TraceEntry> trace;
    std::optional<ExponentProfile> exponent;
    bool numerical_failure = false;
    bool upstream_failed = false;

    for (const std::string& stage : kStageOrder) {
        if (!enabled.count(stage)) continue;
        if (upstream_failed) {
            Report rep;
            rep.name = stage;
            rep.notes.push_back("skipped: upstream stage failed");
            rep.passed = false;
            result.reports.push_back(rep);
            meta["stages"][stage] = {{"status", "skipped"}, {"wall_time_s", 0.0}};
            continue;
        }
        detail::StageTimer timer;
        log_line("stage " + stage);
        try {
            Report rep;
            if (stage == "profile") {
                rep = detail::profile_stage(cfg, prof);
                profile_to_csv(prof, cfg.out_dir + "/profile.csv");
                std::ofstream(cfg.out_dir + "/profile.json")
                    << profile_to_json(prof).dump(2) << "\n";
            } else if (stage == "metric") {
                rep = detail::metric_stage(cfg, prof, metric);
                metric_to_csv(metric, cfg.out_dir + "/metric.csv");
            } else if (stage == "conformal") {
                rep = detail::conformal_stage(cfg, prof, metric);
            } else if (stage == "embedding") {
                rep = detail::embedding_stage(cfg, prof, metric);
            } else {
                rep = detail::flattener_stage(cfg, prof, metric, trace, exponent);
                if (exponent) exponent_to_csv(*exponent, cfg.out_dir + "/exponent.csv");
                trace_to_jsonl(trace, cfg.out_dir + "/flatten_trace.jsonl");
            }
            rep.wall_time_s = timer.seconds();
            meta["stages"][stage] = {{"status", "ok"}, {"wall_time_s", rep.wall_time_s}};
            result.reports.push_back(rep);
            if (!rep.passed && result.exit_code == 0) result.exit_code = 1;
        } catch (const std::exception& e) {
            Report rep;
            rep.name = stage;
            rep.passed = false;
            rep.notes.push_back(std::string("numerical failure: ") + e.what());
            rep.wall_time_s = timer.seconds();
            result.reports.push_back(rep);
            meta["stages"][stage] = {{"status", "failed"}, {"wall_time_s", rep.wall_time_s}};
            numerical_failure = true;
            upstream_failed = true;
        }
    }

    if (cfg.plots && !prof.u.empty() && metric.grid) {
        ScalarField kfield(metric.grid);
        for (std::size_t i = 0; i < metric.nu(); ++i)
            for (std::size_t j = 0; j < metric.ns(); ++j)
                kfield.at(i, j) = prof.k[i];
        field_to_dat(kfield, cfg.out_dir + "/plots/curvature.dat");
        ScalarField g11f(metric.grid), g12f(metric.grid);
        g11f.v = metric.g11;
        g12f.v = metric.g12;
        field_to_dat(g11f, cfg.out_dir + "/plots/g11.dat");
        field_to_dat(g12f, cfg.out_dir + "/plots/g12.dat");
    }

    nlohmann::json jreports = nlohmann::json::array();
    for (const Report& rep : result.reports) jreports.push_back(to_json(rep));
    std::ofstream(cfg.out_dir + "/reports.json") << jreports.dump(2) << "\n";
    std::ofstream(cfg.out_dir + "/run_meta.json") << meta.dump(2) << "\n";

    {
        std::ofstream sum(cfg.out_dir + "/summary.txt");
        char buf[256];
        sum << "stage        status  max_residual   tolerance      notes\n";
        for (const Report& rep : result.reports) {
            std::snprintf(buf, sizeof buf, "%-12s %-7s %.6e  %.6e  %s\n", rep.name.c_str(),
                          rep.passed ? "pass" : "FAIL", rep.max_residual, rep.tolerance,
                          rep.notes.empty() ? "" : rep.notes.front().c_str());
            sum << buf;
        }
    }

    if (numerical_failure) result.exit_code = 3;
    return result;
}

} // namespace biconserve

#endif
