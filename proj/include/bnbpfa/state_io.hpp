#pragma once

// JSON snapshots of a chain state. Matrices are stored row by row.

#include "bnbpfa/error.hpp"
#include "bnbpfa/hyper.hpp"
#include "bnbpfa/pfa_model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace bnbpfa {

struct Snapshot {
    Variant variant = Variant::BGG;
    std::size_t iteration = 0;
    std::uint64_t seed = 0;
    HyperParams hyper;
    FactorState state;
    std::vector<Count> factor_totals;
};

namespace detail {

template <typename Mat> nlohmann::json matrix_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename Mat> Mat matrix_from_json(const nlohmann::json& j, const char* name) {
    if (!j.is_array()) throw ValidationError(std::string("snapshot: ") + name + " must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ValidationError(std::string("snapshot: ragged matrix ") + name);
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<typename Mat::Scalar>();
    }
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// JSON has no infinity; g may be +inf for the NMF limit.
inline nlohmann::json number_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double number_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return HUGE_VAL;
        if (s == "-inf") return -HUGE_VAL;
        throw ValidationError("snapshot: bad number '" + s + "'");
    }
    return j.get<double>();
}

} // namespace detail

inline nlohmann::json hyper_to_json(const HyperParams& h, Variant v) {
    nlohmann::json j;
    j["K"] = h.K;
    j["c"] = h.c;
    j["c0"] = h.c0;
    j["r0"] = h.r0;
    j["gamma"] = h.gamma;
    j["alpha"] = h.alpha;
    j["eps"] = h.eps_value();
    j["a_phi"] = h.a_phi_for(v);
    j["a_theta"] = h.a_theta_for(v);
    j["b_phi"] = h.b_phi;
    j["g"] = detail::number_or_inf(h.g);
    j["estimate_g"] = h.estimate_g;
    j["r_fixed"] = h.r_fixed;
    return j;
}

inline HyperParams hyper_from_json(const nlohmann::json& j) {
    HyperParams h;
    h.K = j.at("K").get<std::size_t>();
    h.c = j.at("c").get<double>();
    h.c0 = j.at("c0").get<double>();
    h.r0 = j.at("r0").get<double>();
    h.gamma = j.at("gamma").get<double>();
    h.alpha = j.at("alpha").get<double>();
    h.eps = j.at("eps").get<double>();
    h.a_phi = j.at("a_phi").get<double>();
    h.a_theta = j.at("a_theta").get<double>();
    h.b_phi = j.at("b_phi").get<double>();
    h.g = detail::number_from_json(j.at("g"));
    h.estimate_g = j.at("estimate_g").get<bool>();
    h.r_fixed = j.at("r_fixed").get<double>();
    return h;
}

inline nlohmann::json snapshot_to_json(const Snapshot& s) {
    nlohmann::json j;
    j["variant"] = std::string(to_string(s.variant));
    j["iteration"] = s.iteration;
    j["seed"] = s.seed;
    j["hyperparameters"] = hyper_to_json(s.hyper, s.variant);
    j["factor_totals"] = s.factor_totals;
    j["phi"] = detail::matrix_to_json(s.state.phi);
    j["theta"] = detail::matrix_to_json(s.state.theta);
    if (s.state.p.size()) j["p"] = detail::vector_to_json(s.state.p);
    if (s.state.r.size()) j["r"] = detail::vector_to_json(s.state.r);
    if (s.state.z) j["z"] = detail::matrix_to_json(*s.state.z);
    if (s.state.scores) j["scores"] = detail::matrix_to_json(*s.state.scores);
    if (s.state.pi) j["pi"] = detail::vector_to_json(*s.state.pi);
    if (s.state.g) {
        nlohmann::json g = nlohmann::json::array();
        for (Eigen::Index k = 0; k < s.state.g->size(); ++k) g.push_back(detail::number_or_inf((*s.state.g)(k)));
        j["g"] = g;
    }
    return j;
}

inline Snapshot snapshot_from_json(const nlohmann::json& j) {
    try {
        Snapshot s;
        s.variant = parse_variant(j.at("variant").get<std::string>());
        s.iteration = j.at("iteration").get<std::size_t>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.hyper = hyper_from_json(j.at("hyperparameters"));
        s.factor_totals = j.at("factor_totals").get<std::vector<Count>>();
        s.state.phi = detail::matrix_from_json<Eigen::MatrixXd>(j.at("phi"), "phi");
        s.state.theta = detail::matrix_from_json<Eigen::MatrixXd>(j.at("theta"), "theta");
        if (j.contains("p")) s.state.p = detail::vector_from_json(j["p"]);
        if (j.contains("r")) s.state.r = detail::vector_from_json(j["r"]);
        if (j.contains("z")) s.state.z = detail::matrix_from_json<BinaryMat>(j["z"], "z");
        if (j.contains("scores")) s.state.scores = detail::matrix_from_json<Eigen::MatrixXd>(j["scores"], "scores");
        if (j.contains("pi")) s.state.pi = detail::vector_from_json(j["pi"]);
        if (j.contains("g")) {
            Eigen::VectorXd g(static_cast<Eigen::Index>(j["g"].size()));
            for (std::size_t k = 0; k < j["g"].size(); ++k)
                g(static_cast<Eigen::Index>(k)) = detail::number_from_json(j["g"][k]);
            s.state.g = g;
        }
        if (static_cast<std::size_t>(s.state.theta.rows()) != s.state.factors())
            throw ValidationError("snapshot: phi and theta disagree on K");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("snapshot: ") + e.what());
    }
}

inline std::string snapshot_text(const Snapshot& s) { return snapshot_to_json(s).dump(1) + "\n"; }

inline Snapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open snapshot " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("snapshot ") + path.string() + ": " + e.what(), 0);
    }
    return snapshot_from_json(j);
}

} // namespace bnbpfa
