// Command-line entry point: pipeline runs and standalone Ricci-condition
// checks on exported metric grids.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biconserve/biconserve.hpp"

namespace {

std::set<std::string> parse_stage_list(const std::string& csv) {
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.insert(item);
    }
    return out;
}

int run_command(const std::string& config_path, const CLI::App& cmd,
                biconserve::RunConfig cfg) {
    using biconserve::log_line;
    try {
        if (!config_path.empty()) {
            biconserve::RunConfig from_file = biconserve::parse_config_file(config_path);
            // Flags override file values: start from the file config, then
            // re-apply every flag the user actually passed.
            std::swap(cfg, from_file);
            const auto apply = [&](const char* flag, auto& slot, const auto& value) {
                if (cmd.count(flag)) slot = value;
            };
            apply("--c", cfg.c, from_file.c);
            apply("--k0", cfg.k0, from_file.k0);
            apply("--kprime0", cfg.kprime0, from_file.kprime0);
            apply("--u0", cfg.u0, from_file.u0);
            apply("--u1", cfg.u1, from_file.u1);
            apply("--s-extent", cfg.s_extent, from_file.s_extent);
            apply("--nu", cfg.nu, from_file.nu);
            apply("--ns", cfg.ns, from_file.ns);
            apply("--ode-tol", cfg.ode_tol, from_file.ode_tol);
            apply("--flat-tol", cfg.flat_tol, from_file.flat_tol);
            apply("--solver-tol", cfg.solver_tol, from_file.solver_tol);
            apply("--r0", cfg.r0, from_file.r0);
            apply("--r0p", cfg.r0p, from_file.r0p);
            apply("--r0pp", cfg.r0pp, from_file.r0pp);
            apply("--r0ppp", cfg.r0ppp, from_file.r0ppp);
            apply("--out", cfg.out_dir, from_file.out_dir);
            apply("--plots", cfg.plots, from_file.plots);
            apply("--stages", cfg.stages, from_file.stages);
        }
        cfg.validate();
        log_line("running stages into " + cfg.out_dir);
        const biconserve::PipelineResult result = biconserve::run_pipeline(cfg);
        for (const biconserve::Report& rep : result.reports)
            std::cout << (rep.passed ? "[pass] " : "[FAIL] ") << rep.name
                      << "  max_residual = " << rep.max_residual
                      << "  tolerance = " << rep.tolerance << "\n";
        std::cout << "reports written to " << cfg.out_dir << "/reports.json\n";
        return result.exit_code;
    } catch (const biconserve::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

int check_ricci_command(const std::string& metric_path, double c,
                        const std::string& variant, const std::string& form,
                        std::optional<double> tol) {
    try {
        const biconserve::MetricGrid m = biconserve::metric_from_csv(metric_path, c);
        const biconserve::ScalarField k = biconserve::gauss_curvature_fd(m);
        const biconserve::RicciVariant v = (variant == "minimal")
                                               ? biconserve::RicciVariant::minimal
                                               : biconserve::RicciVariant::biconservative;
        biconserve::RicciForm f = biconserve::RicciForm::i;
        if (form == "ii") f = biconserve::RicciForm::ii;
        else if (form == "iii") f = biconserve::RicciForm::iii;
        else if (form == "iv") f = biconserve::RicciForm::iv;
        const biconserve::RicciReport rep =
            biconserve::ricci_condition(m, k, c, v, f,
                                        tol ? std::optional<double>(*tol) : std::nullopt);
        std::cout << biconserve::to_json(rep).dump(2) << "\n";
        return rep.passed ? 0 : 1;
    } catch (const biconserve::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"biconserve: intrinsic metrics of non-CMC biconservative surfaces "
                 "in space forms, with discrete verification of their curvature, "
                 "conformal, and extrinsic identities"};
    app.require_subcommand(1);

    biconserve::RunConfig defaults;

    auto* run = app.add_subcommand("run", "integrate -> build -> verify -> transform -> "
                                          "flatten -> report");
    std::string config_path;
    std::string stages_csv;
    run->add_option("--config", config_path, "JSON config file; flags override its values");
    run->add_option("--c", defaults.c, "space-form curvature c")->capture_default_str();
    run->add_option("--k0", defaults.k0, "K(0)")->capture_default_str();
    run->add_option("--kprime0", defaults.kprime0, "K'(0) > 0")->capture_default_str();
    run->add_option("--u0", defaults.u0, "span start")->capture_default_str();
    run->add_option("--u1", defaults.u1, "span end")->capture_default_str();
    run->add_option("--s-extent", defaults.s_extent, "s ranges over [-S, S]")
        ->capture_default_str();
    run->add_option("--nu", defaults.nu, "u samples")->capture_default_str();
    run->add_option("--ns", defaults.ns, "s samples")->capture_default_str();
    run->add_option("--ode-tol", defaults.ode_tol, "profile integrator tolerance")
        ->capture_default_str();
    run->add_option("--flat-tol", defaults.flat_tol,
                    "relative flatness tolerance at h = 1e-2")
        ->capture_default_str();
    run->add_option("--solver-tol", defaults.solver_tol, "flattener residual control")
        ->capture_default_str();
    run->add_option("--r0", defaults.r0, "flattener r(0)")->capture_default_str();
    run->add_option("--r0p", defaults.r0p, "flattener r'(0)")->capture_default_str();
    run->add_option("--r0pp", defaults.r0pp, "flattener r''(0)")->capture_default_str();
    run->add_option("--r0ppp", defaults.r0ppp, "flattener r'''(0)")->capture_default_str();
    run->add_option("--stages", stages_csv,
                    "comma list of profile,metric,conformal,embedding,flattener");
    run->add_option("--out", defaults.out_dir, "output directory")->capture_default_str();
    run->add_flag("--plots", defaults.plots, "emit gnuplot-style tables under out/plots");

    auto* check = app.add_subcommand("check-ricci",
                                     "evaluate a Ricci condition on a metric CSV");
    std::string metric_path, variant = "minimal", form = "i";
    double c_val = 0.0;
    double tol_val = 0.0;
    check->add_option("--metric", metric_path, "metric CSV (u,s,g11,g12,g22)")->required();
    check->add_option("--c", c_val, "space-form curvature c")->required();
    check->add_option("--variant", variant, "minimal | biconservative")
        ->check(CLI::IsMember({"minimal", "biconservative"}));
    check->add_option("--form", form, "i | ii | iii | iv")
        ->check(CLI::IsMember({"i", "ii", "iii", "iv"}));
    auto* tol_opt = check->add_option("--tol", tol_val, "override pass tolerance");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (!stages_csv.empty()) defaults.stages = parse_stage_list(stages_csv);
        return run_command(config_path, *run, defaults);
    }
    return check_ricci_command(metric_path, c_val, variant, form,
                               tol_opt->count() ? std::optional<double>(tol_val)
                                                : std::nullopt);
}
