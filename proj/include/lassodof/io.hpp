#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lassodof/dof.hpp"
#include "lassodof/errors.hpp"
#include "lassodof/geometry.hpp"
#include "lassodof/linalg.hpp"
#include "lassodof/penalties.hpp"
#include "lassodof/problem.hpp"
#include "lassodof/sets.hpp"
#include "lassodof/stein.hpp"

namespace lassodof {

inline constexpr const char* kSchema = "lassodof/1";

// CSV: plain decimals, comma separated, no header, one matrix row per line.

inline std::vector<std::vector<double>> read_csv_rows(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            if (b == std::string::npos) throw InputError(path + ":" + std::to_string(lineno) + ": empty cell");
            const std::string tok = cell.substr(b, e - b + 1);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) {
                throw InputError(path + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InputError(path + ":" + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path + " is empty");
    return rows;
}

inline DenseMatrix read_csv_matrix(const std::string& path)
{
    const auto rows = read_csv_rows(path);
    DenseMatrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    if (!M.allFinite()) throw InputError(path + " has non-finite entries");
    return M;
}

/// A single column or a single row.
inline Vec read_csv_vector(const std::string& path)
{
    const DenseMatrix M = read_csv_matrix(path);
    if (M.cols() == 1) return M.col(0);
    if (M.rows() == 1) return M.row(0).transpose();
    throw InputError(path + " is not a vector");
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv_matrix(const std::string& path, const DenseMatrix& M)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
}

inline void write_csv_vector(const std::string& path, const Vec& v) { write_csv_matrix(path, DenseMatrix(v)); }

/// Two integer columns, 0-based node indices.
inline GraphEdges read_graph_edges(const std::string& path, Index node_count)
{
    const auto rows = read_csv_rows(path);
    GraphEdges g;
    g.node_count = node_count;
    for (const auto& r : rows) {
        if (r.size() != 2) throw InputError(path + ": edge rows need exactly two columns");
        for (double v : r) {
            if (v != std::floor(v)) throw InputError(path + ": edge endpoints must be integers");
        }
        g.edges.emplace_back(static_cast<Index>(r[0]), static_cast<Index>(r[1]));
    }
    g.validate();
    return g;
}

// JSON

inline nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline void to_json(nlohmann::json& j, const SignedIndexSet& s)
{
    j = nlohmann::json{{"indices", s.indices}, {"signs", s.signs}};
    if (s.degenerate) j["degenerate"] = true;
}

inline void from_json(const nlohmann::json& j, SignedIndexSet& s)
{
    s.indices = j.at("indices").get<std::vector<Index>>();
    s.signs = j.at("signs").get<std::vector<int>>();
    s.degenerate = j.value("degenerate", false);
}

inline void to_json(nlohmann::json& j, const SetTolerance& t)
{
    j = nlohmann::json{{"membership_tol", t.membership_tol}, {"zero_tol", t.zero_tol}};
}

inline nlohmann::json rank_tol_json(RankTolerance r)
{
    if (r.is_automatic()) return nlohmann::json{{"mode", "automatic"}, {"formula", "max(rows,cols)*2^-46"}};
    return nlohmann::json{{"mode", "relative"}, {"relative_cutoff", r.cutoff_for(1, 1)}};
}

inline void to_json(nlohmann::json& j, const DfReport& r)
{
    j = nlohmann::json{{"df", r.df_value},
                       {"estimator", std::string(to_string(r.estimator))},
                       {"set", r.set_used},
                       {"degenerate_lambda_zero", r.degenerate_lambda_zero}};
    nlohmann::json tol{{"rank", rank_tol_json(r.rank_tolerance)}};
    if (r.set_tolerance) tol["set"] = *r.set_tolerance;
    j["tolerances"] = tol;
}

inline void to_json(nlohmann::json& j, const Solution& s)
{
    j = nlohmann::json{{"beta", vec_json(s.beta)},
                       {"fit", vec_json(s.fit)},
                       {"gamma", vec_json(s.gamma)},
                       {"diagnostics",
                        {{"iterations", s.iterations},
                         {"primal_residual", s.primal_residual},
                         {"dual_residual", s.dual_residual},
                         {"kkt_residual", s.kkt_residual},
                         {"polished", s.polished},
                         {"normal_matrix_singular", s.normal_matrix_singular}}}};
    if (s.intercept) j["intercept"] = *s.intercept;
}

inline void to_json(nlohmann::json& j, const McDfEstimate& e)
{
    j = nlohmann::json{{"df_mean", e.df_mean},
                       {"df_std_error", e.df_std_error},
                       {"replications_used", e.replications_used},
                       {"replications_dropped", e.replications_dropped}};
}

inline void to_json(nlohmann::json& j, const ValidationSummary& s)
{
    j = nlohmann::json{{"covariance_df", s.covariance},
                       {"set_based_df", s.set_based},
                       {"difference", s.difference},
                       {"combined_std_error", s.combined_std_error},
                       {"gate_multiplier", s.gate_multiplier},
                       {"pass", s.pass},
                       {"sure_mean", s.sure_mean},
                       {"sure_std_error", s.sure_std_error},
                       {"risk_mean", s.risk_mean},
                       {"risk_std_error", s.risk_std_error}};
}

inline void to_json(nlohmann::json& j, const AffineProbeReport& r)
{
    j = nlohmann::json{{"directions", r.directions},
                       {"step", r.step},
                       {"pass_fraction", r.pass_fraction()},
                       {"set_constancy_fraction", r.set_constancy_fraction()},
                       {"max_affine_error", r.max_affine_error}};
}

inline void write_replication_csv(const std::string& path, const std::vector<ReplicationRecord>& records)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "replication,df_term,sure_value\n";
    for (const auto& r : records) {
        if (r.dropped) continue;
        out << r.replication << ',' << format_double(r.df_term) << ',' << format_double(r.sure_value) << '\n';
    }
}

} // namespace lassodof
