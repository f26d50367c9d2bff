#ifndef BICONSERVE_IO_HPP
#define BICONSERVE_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "biconserve/errors.hpp"
#include "biconserve/field.hpp"
#include "biconserve/flattener.hpp"
#include "biconserve/metric.hpp"
#include "biconserve/profile.hpp"

namespace biconserve {

namespace detail {
inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("path", "cannot open for writing: " + path);
    return f;
}
} // namespace detail

// ---- profile ---------------------------------------------------------------

inline void profile_to_csv(const CurvatureProfile& prof, const std::string& path) {
    auto f = detail::open_out(path);
    f << "u,K,Kprime\n";
    for (std::size_t i = 0; i < prof.size(); ++i)
        f << detail::fmt_double(prof.u[i]) << ',' << detail::fmt_double(prof.k[i]) << ','
          << detail::fmt_double(prof.kp[i]) << '\n';
}

inline CurvatureProfile profile_from_csv(const std::string& path, double c,
                                         bool truncated = false) {
    std::ifstream f(path);
    if (!f) throw ConfigError("path", "cannot open profile csv: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("u,K,Kprime", 0) != 0)
        throw ConfigError("format", "profile csv must start with header u,K,Kprime");
    CurvatureProfile prof;
    prof.c = c;
    prof.truncated = truncated;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 3)
            throw ConfigError("format", "profile csv row needs 3 columns");
        prof.u.push_back(std::stod(cells[0]));
        prof.k.push_back(std::stod(cells[1]));
        prof.kp.push_back(std::stod(cells[2]));
    }
    prof.requested_end = prof.u.empty() ? 0.0 : prof.u.back();
    return prof;
}

inline nlohmann::json profile_to_json(const CurvatureProfile& prof) {
    nlohmann::json j;
    j["c"] = prof.c;
    j["u"] = prof.u;
    j["K"] = prof.k;
    j["Kprime"] = prof.kp;
    j["truncated"] = prof.truncated;
    return j;
}

inline CurvatureProfile profile_from_json(const nlohmann::json& j) {
    CurvatureProfile prof;
    prof.c = j.at("c").get<double>();
    prof.u = j.at("u").get<std::vector<double>>();
    prof.k = j.at("K").get<std::vector<double>>();
    prof.kp = j.at("Kprime").get<std::vector<double>>();
    prof.truncated = j.value("truncated", false);
    prof.requested_end = prof.u.empty() ? 0.0 : prof.u.back();
    if (prof.k.size() != prof.u.size() || prof.kp.size() != prof.u.size())
        throw ConfigError("format", "profile json arrays disagree in length");
    return prof;
}

// ---- metric and fields -----------------------------------------------------

inline void metric_to_csv(const MetricGrid& m, const std::string& path) {
    auto f = detail::open_out(path);
    f << "u,s,g11,g12,g22\n";
    for (std::size_t i = 0; i < m.nu(); ++i)
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = m.grid->index(i, j);
            f << detail::fmt_double(m.grid->u(i)) << ',' << detail::fmt_double(m.grid->s(j))
              << ',' << detail::fmt_double(m.g11[idx]) << ','
              << detail::fmt_double(m.g12[idx]) << ',' << detail::fmt_double(m.g22[idx])
              << '\n';
        }
}

inline MetricGrid metric_from_csv(const std::string& path, double c) {
    std::ifstream f(path);
    if (!f) throw ConfigError("path", "cannot open metric csv: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("u,s,g11,g12,g22", 0) != 0)
        throw ConfigError("format", "metric csv must start with header u,s,g11,g12,g22");
    std::vector<double> u, s, g11, g12, g22;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 5) throw ConfigError("format", "metric csv row needs 5 columns");
        u.push_back(std::stod(cells[0]));
        s.push_back(std::stod(cells[1]));
        g11.push_back(std::stod(cells[2]));
        g12.push_back(std::stod(cells[3]));
        g22.push_back(std::stod(cells[4]));
    }
    if (u.empty()) throw ConfigError("format", "metric csv has no rows");
    // Rows are u-major blocks: s cycles fastest.
    std::size_t ns = 1;
    while (ns < s.size() && s[ns] > s[ns - 1]) ++ns;
    if (ns < 2 || u.size() % ns != 0)
        throw ConfigError("format", "metric csv is not a complete rectangular grid");
    const std::size_t nu = u.size() / ns;
    std::vector<double> unodes(nu), snodes(s.begin(), s.begin() + static_cast<long>(ns));
    for (std::size_t i = 0; i < nu; ++i) unodes[i] = u[i * ns];
    auto grid = std::make_shared<const Grid2D>(Grid2D(std::move(unodes), std::move(snodes)));
    MetricGrid m(grid, c);
    m.g11 = std::move(g11);
    m.g12 = std::move(g12);
    m.g22 = std::move(g22);
    m.check_positive_definite();
    return m;
}

inline void field_to_csv(const ScalarField& f, const std::string& path) {
    auto out = detail::open_out(path);
    out << "u,s,value\n";
    for (std::size_t i = 0; i < f.nu(); ++i)
        for (std::size_t j = 0; j < f.ns(); ++j)
            out << detail::fmt_double(f.grid->u(i)) << ',' << detail::fmt_double(f.grid->s(j))
                << ',' << detail::fmt_double(f.at(i, j)) << '\n';
}

/// gnuplot-style whitespace table, one blank line between u-blocks.
inline void field_to_dat(const ScalarField& f, const std::string& path) {
    auto out = detail::open_out(path);
    for (std::size_t i = 0; i < f.nu(); ++i) {
        for (std::size_t j = 0; j < f.ns(); ++j)
            out << detail::fmt_double(f.grid->u(i)) << ' ' << detail::fmt_double(f.grid->s(j))
                << ' ' << detail::fmt_double(f.at(i, j)) << '\n';
        out << '\n';
    }
}

// ---- flattener -------------------------------------------------------------

inline void exponent_to_csv(const ExponentProfile& e, const std::string& path) {
    auto f = detail::open_out(path);
    f << "u,r,rprime,rsecond,rthird\n";
    for (std::size_t i = 0; i < e.size(); ++i)
        f << detail::fmt_double(e.u[i]) << ',' << detail::fmt_double(e.r[i]) << ','
          << detail::fmt_double(e.rp[i]) << ',' << detail::fmt_double(e.rpp[i]) << ','
          << detail::fmt_double(e.rppp[i]) << '\n';
}

inline void trace_to_jsonl(const std::vector<TraceEntry>& trace, const std::string& path) {
    auto f = detail::open_out(path);
    for (const TraceEntry& t : trace) {
        nlohmann::json j;
        j["iteration"] = t.iteration;
        j["residual_max"] = t.residual_max;
        j["residual_l2"] = t.residual_l2;
        j["step"] = t.step;
        f << j.dump() << '\n';
    }
}

} // namespace biconserve

#endif
