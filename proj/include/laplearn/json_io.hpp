// JSON serialization for solver and theory reports (nlohmann/json).
#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "laplearn/eval.hpp"
#include "laplearn/theory.hpp"
#include "laplearn/whittle.hpp"

namespace laplearn {

using Json = nlohmann::ordered_json;

inline Json to_json(const EdgeSet& edges) {
    Json arr = Json::array();
    for (const auto& [i, j] : edges) arr.push_back(Json::array({i, j}));
    return arr;
}

inline Json to_json(const SolveReport& rep) {
    const RealMatrix& l = rep.L_hat.matrix();
    Json j;
    j["p"] = l.rows();
    j["lambda"] = rep.lambda;
    Json flat = Json::array();
    for (Index r = 0; r < l.rows(); ++r)
        for (Index c = 0; c < l.cols(); ++c) flat.push_back(l(r, c));
    j["l_hat"] = std::move(flat);  // dense row-major
    j["support"] = to_json(rep.support);
    j["support_tol"] = rep.support_tol;
    j["kkt_residual"] = rep.kkt_residual;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["backtracks"] = rep.backtracks;
    j["objective_trace"] = rep.objective_trace;
    return j;
}

inline SolveReport solve_report_from_json(const Json& j) {
    SolveReport rep;
    const Index p = j.at("p").get<Index>();
    RealMatrix l(p, p);
    const auto& flat = j.at("l_hat");
    for (Index r = 0; r < p; ++r)
        for (Index c = 0; c < p; ++c)
            l(r, c) = flat.at(static_cast<std::size_t>(r * p + c)).get<double>();
    rep.L_hat = SymmetricMatrix(std::move(l), 1e-9);
    rep.lambda = j.at("lambda").get<double>();
    rep.support_tol = j.at("support_tol").get<double>();
    rep.kkt_residual = j.at("kkt_residual").get<double>();
    rep.iterations = j.at("iterations").get<Index>();
    rep.converged = j.at("converged").get<bool>();
    rep.backtracks = j.at("backtracks").get<Index>();
    rep.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    for (const auto& e : j.at("support"))
        rep.support.emplace_back(e.at(0).get<Index>(), e.at(1).get<Index>());
    return rep;
}

inline Json to_json(const RecoveryMetrics& m) {
    Json j;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["f_score"] = m.f_score;
    j["sign_consistent"] = m.sign_consistent;
    j["err_max_abs"] = m.err_max_abs;
    j["err_frobenius"] = m.err_frobenius;
    j["err_operator2"] = m.err_operator2;
    return j;
}

inline Json to_json(const TheoryReport& r) {
    Json j;
    j["p"] = r.p;
    j["d"] = r.d;
    j["n"] = r.n;
    j["m"] = r.m;
    j["tau"] = r.tau;
    j["alpha"] = r.alpha;
    j["c_alpha"] = r.c_alpha_value;
    j["kappa"] = r.kappa;
    j["kappa_bound_rhs"] = r.kappa_bound_rhs;
    j["kappa_holds"] = r.kappa_holds;
    j["omega_n"] = r.omega_n;
    j["l_n"] = r.l_n;
    j["delta_threshold"] = r.delta;
    j["lambda_theorem1"] = r.lambda_theorem1;
    j["radius_r"] = r.radius_r;
    j["zeta"] = r.zeta;
    j["beta_min"] = r.beta_min;
    j["nu"] = {{"nu_lstar", r.nu.nu_lstar},
               {"nu_lstar_inv", r.nu.nu_lstar_inv},
               {"nu_d2", r.nu.nu_d2},
               {"nu_gamma_inv", r.nu.nu_gamma_inv}};
    j["nu_theta_y_inv"] = r.nu_theta_y_inv;
    j["bandwidth_requirement"] = r.bandwidth_requirement;
    j["sample_requirement"] = r.sample_requirement;
    j["dual_max"] = r.dual_max;
    j["dual_strict_feasible"] = r.dual_strict_feasible;
    return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << j.dump(2) << '\n';
}

inline Json read_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace laplearn
