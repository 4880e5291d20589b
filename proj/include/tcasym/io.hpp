#pragma once

// CSV / JSON export of boundaries, grid solutions, verification reports,
// simulation results and sweep reports.

#include <tcasym/analysis.hpp>
#include <tcasym/asymptotics.hpp>
#include <tcasym/hjb.hpp>
#include <tcasym/model.hpp>
#include <tcasym/simulate.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tcasym {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// JSON has no infinities; encode non-finite numbers as strings
inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

}  // namespace detail

inline json to_json(const MarketParams& m) {
    return {{"mu", m.mu}, {"sigma", m.sigma}, {"r", m.r}, {"p", m.p}, {"lambda", m.lambda},
            {"beta", m.beta}, {"T", m.T}, {"t0", m.t0}};
}

inline json to_json(const DerivedConstants& c) {
    return {{"theta", c.theta}, {"A", c.A}, {"gamma2", c.gamma2}, {"nu", c.nu},
            {"B", c.B}, {"M", c.M}, {"xi_max", c.xi_max}};
}

inline std::string boundaries_csv(const BoundarySet& b) {
    std::ostringstream os;
    os << "t,delta1,delta2,zeta1,zeta2,residual1,residual2\n";
    for (std::size_t i = 0; i < b.size(); ++i)
        os << detail::num(b.times[i]) << ',' << detail::num(b.delta1[i]) << ',' << detail::num(b.delta2[i]) << ','
           << detail::num(b.theta + b.delta1[i]) << ',' << detail::num(b.theta + b.delta2[i]) << ','
           << detail::num(b.residual1[i]) << ',' << detail::num(b.residual2[i]) << '\n';
    return os.str();
}

inline json to_json(const BoundarySet& b) {
    json j = {{"family", to_string(b.family)}, {"lambda", b.lambda}, {"theta", b.theta},
              {"max_residual", b.max_residual()}, {"inside_lemma_bracket", b.all_inside_lemma_bracket()}};
    j["t"] = b.times;
    j["delta1"] = b.delta1;
    j["delta2"] = b.delta2;
    j["residual1"] = b.residual1;
    j["residual2"] = b.residual2;
    return j;
}

inline json to_json(const VerifyReport& r) {
    json v = json::array();
    for (const auto& x : r.violations)
        v.push_back({{"check", x.check}, {"t", x.t}, {"z", x.z}, {"value", detail::jnum(x.value)}});
    json j = {{"family", to_string(r.family)},
              {"lambda", r.lambda},
              {"ok", r.ok()},
              {"points", r.points},
              {"worst_hjb", detail::jnum(r.worst_hjb)},
              {"worst_hjb_t", r.worst_hjb_t},
              {"worst_hjb_z", r.worst_hjb_z},
              {"worst_final", detail::jnum(r.worst_final)},
              {"violations", v}};
    if (r.family == Family::plus) {
        j["step4c_min_g"] = detail::jnum(r.min_g);
        j["step4c_min_h"] = detail::jnum(r.min_h);
        j["g_at_zeta1"] = detail::jnum(r.g_at_zeta1);
    }
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

inline json header_json(const GridSolution& s) {
    return {{"params", to_json(s.params)},
            {"grid",
             {{"z_min", s.grid.z_min},
              {"z_max", s.grid.z_max},
              {"nz", s.grid.nz},
              {"nt", s.grid.nt},
              {"scheme", to_string(s.grid.scheme)},
              {"rho", s.grid.rho}}},
            {"layers", s.layers()},
            {"times", s.times},
            {"stats",
             {{"steps", s.stats.steps},
              {"max_projection_sweeps", s.stats.max_projection_sweeps},
              {"newton_iterations", s.stats.newton_iterations},
              {"max_newton_iterations", s.stats.max_newton_iterations},
              {"seconds", s.stats.seconds}}},
            {"values_file_layout", "one row per stored time layer (increasing t), one column per z node"}};
}

/// Values as CSV: first row the z nodes, then one row per stored layer with t first.
inline std::string values_csv(const GridSolution& s) {
    std::ostringstream os;
    os << "t";
    for (std::size_t j = 0; j < s.grid.nz; ++j) os << ',' << detail::num(s.grid.z(j));
    os << '\n';
    for (std::size_t k = 0; k < s.layers(); ++k) {
        os << detail::num(s.times[k]);
        for (std::size_t j = 0; j < s.grid.nz; ++j) os << ',' << detail::num(s.at(k, j));
        os << '\n';
    }
    return os.str();
}

inline json to_json(const SimulationResult& r) {
    return {{"estimate", detail::jnum(r.estimate)}, {"std_error", detail::jnum(r.std_error)},
            {"n_paths", r.n_paths}, {"trade_volume", r.trade_volume},
            {"boundary_hits", r.boundary_hits}, {"ruin_count", r.ruin_count},
            {"solvency_violations", r.solvency_violations}, {"max_projection_error", r.max_projection_error}};
}

inline std::string simulation_csv(double lambda, const SimulationResult& r) {
    std::ostringstream os;
    os << "lambda,estimate,std_error,trade_volume,boundary_hits,ruin_count\n"
       << detail::num(lambda) << ',' << detail::num(r.estimate) << ',' << detail::num(r.std_error) << ','
       << detail::num(r.trade_volume) << ',' << detail::num(r.boundary_hits) << ',' << r.ruin_count << '\n';
    return os.str();
}

inline json to_json(const LinearFit& f) {
    return {{"n", f.n}, {"slope", f.slope}, {"intercept", f.intercept}, {"slope_se", f.slope_se},
            {"ci95", {f.ci_low, f.ci_high}}, {"r_squared", f.r_squared}, {"low_r_squared", f.low_r_squared}};
}

inline json to_json(const SweepReport& r) {
    json rows = json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"lambda", x.lambda}, {"u_num", x.u_num}, {"u_error", x.u_error}, {"loss", x.loss},
                        {"loss_over_lambda23", x.coefficient}, {"nz", x.nz}, {"nt", x.nt}});
    json j = {{"params", to_json(r.params)},
              {"predicted_coefficient", r.predicted_coefficient},
              {"rows", rows},
              {"loss_increasing", r.loss_increasing}};
    j["fit"] = r.fit ? to_json(*r.fit) : json(nullptr);
    if (r.two_term)
        j["two_term_fit"] = {{"c_lambda23", r.two_term->c1}, {"c_lambda", r.two_term->c2},
                             {"max_rel_residual", r.two_term->max_rel_residual}};
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline std::string sweep_csv(const SweepReport& r) {
    std::ostringstream os;
    os << "lambda,u_num,u_error,loss,loss_over_lambda23,predicted_coefficient\n";
    for (const auto& x : r.rows)
        os << detail::num(x.lambda) << ',' << detail::num(x.u_num) << ',' << detail::num(x.u_error) << ','
           << detail::num(x.loss) << ',' << detail::num(x.coefficient) << ','
           << detail::num(r.predicted_coefficient) << '\n';
    return os.str();
}

/// x, y, error columns for plotting log loss against log lambda.
inline std::string sweep_plot_data(const SweepReport& r) {
    std::ostringstream os;
    os << "x,y,error\n";
    for (const auto& x : r.rows)
        os << detail::num(x.lambda) << ',' << detail::num(x.loss) << ',' << detail::num(x.u_error) << '\n';
    return os.str();
}

inline json to_json(const SandwichRow& s) {
    json j = {{"lambda", s.lambda},
              {"pass", s.pass()},
              {"min_upper_margin", detail::jnum(s.min_upper_margin)},
              {"min_lower_margin", detail::jnum(s.min_lower_margin)},
              {"upper_at", {s.upper_t, s.upper_z}},
              {"lower_at", {s.lower_t, s.lower_z}},
              {"error_estimate", s.error_estimate},
              {"max_width", s.max_width},
              {"points", s.points}};
    if (!s.error.empty()) j["error"] = s.error;
    return j;
}

inline json to_json(const GapReport& g) {
    json rows = json::array();
    for (const auto& r : g.rows) {
        json x = {{"lambda", r.lambda}, {"u_num", r.u_num}, {"u_error", r.u_error}, {"mc", detail::jnum(r.mc)},
                  {"std_error", detail::jnum(r.std_error)}, {"w_minus", detail::jnum(r.w_minus)},
                  {"gap", detail::jnum(r.gap)}, {"signal", r.signal}};
        if (!r.error.empty()) x["error"] = r.error;
        rows.push_back(x);
    }
    return {{"rows", rows}, {"fit", g.fit ? to_json(*g.fit) : json(nullptr)}};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("error writing '" + path + "'");
}

}  // namespace tcasym
