// lassodof: solve lasso-type problems, report degrees of freedom, and run
// Monte Carlo checks from the command line. Matrices are plain CSV files.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lassodof/io.hpp"
#include "lassodof/lassodof.hpp"

using namespace lassodof;
using nlohmann::json;

namespace {

enum ExitCode { ok = 0, failure = 1, input_error = 2, convergence_failure = 3, gate_failure = 4, df_mismatch = 5 };

struct Options {
    std::string x_path, y_path, mu_path;
    std::string penalty = "identity";
    std::optional<double> lambda;
    std::vector<double> lambda_grid;
    std::optional<double> lambda2;
    bool intercept = false;
    double sigma = 1.0;
    long replications = 2000;
    std::uint64_t seed = 0;
    std::optional<double> tol_set;
    std::optional<double> tol_rank;
    std::optional<long> max_iterations;
    std::string out = "-";
    std::string replication_csv;
    std::string curve_csv;

    std::string family = "gaussian";
    long n = 0, p = 0;
    std::optional<long> sparsity;
    double signal = 2.0;
    long duplicate_pairs = 1;
    std::string out_dir = ".";
};

enum class Kind { lasso, genlasso, elastic_net, intercept };

/// Everything needed to fit one response at one lambda.
struct Model {
    Kind kind = Kind::lasso;
    DenseMatrix X;
    DenseMatrix D;
    std::string penalty;
    double lambda2 = 0.0;
    std::optional<double> tol_set;
    RankTolerance rtol = RankTolerance::automatic();
    SolverOptions solver;

    SetTolerance set_tolerance(double lambda) const
    {
        SetTolerance t = SetTolerance::for_lambda(lambda);
        if (tol_set) t.membership_tol = *tol_set;
        t.validate_against(solver);
        return t;
    }
};

DenseMatrix build_penalty(const std::string& text, Index p)
{
    if (text == "chain") return diff_1d(p);
    if (text.rfind("graph:", 0) == 0) return graph_incidence(read_graph_edges(text.substr(6), p));
    if (text.rfind("trend:", 0) == 0) {
        long k = -1;
        try {
            k = std::stol(text.substr(6));
        } catch (const std::exception&) {
            throw InputError("bad trend order in '" + text + "'");
        }
        if (k < 0) throw InputError("trend order must be nonnegative");
        return difference_power(p, k);
    }
    throw InputError("unknown penalty '" + text + "' (identity, chain, graph:FILE, trend:K)");
}

Model load_model(const Options& o)
{
    if (o.x_path.empty()) throw InputError("--x is required");
    Model m;
    m.X = read_csv_matrix(o.x_path);
    m.penalty = o.penalty;
    m.tol_set = o.tol_set;
    if (o.tol_rank) m.rtol = RankTolerance::relative(*o.tol_rank);
    if (o.tol_set && !(*o.tol_set > 0.0)) throw InputError("--tol-set must be positive");
    if (o.max_iterations) {
        if (*o.max_iterations < 1) throw InputError("--max-iterations must be positive");
        m.solver.max_iterations = *o.max_iterations;
    }

    const bool generalized = o.penalty != "identity";
    if (generalized && (o.lambda2 || o.intercept)) {
        throw InputError("--lambda2 and --intercept apply to the identity penalty only");
    }
    if (o.lambda2 && o.intercept) throw InputError("--lambda2 and --intercept cannot be combined");
    if (generalized) {
        m.kind = Kind::genlasso;
        m.D = build_penalty(o.penalty, m.X.cols());
    } else if (o.lambda2) {
        m.kind = Kind::elastic_net;
        m.lambda2 = *o.lambda2;
        if (!(m.lambda2 > 0.0)) throw InputError("--lambda2 must be positive");
    } else if (o.intercept) {
        m.kind = Kind::intercept;
    }
    return m;
}

Vec load_y(const Options& o, Index n)
{
    if (o.y_path.empty()) throw InputError("--y is required");
    const Vec y = read_csv_vector(o.y_path);
    if (y.size() != n) throw InputError("y length does not match the rows of X");
    return y;
}

double require_lambda(const Options& o)
{
    if (!o.lambda) throw InputError("--lambda is required");
    return *o.lambda;
}

LassoProblem centered_problem(const DenseMatrix& X, const Vec& y, double lambda)
{
    DenseMatrix Xc = X;
    Xc.rowwise() -= Xc.colwise().mean();
    return LassoProblem{Xc, y.array() - y.mean(), lambda};
}

LassoProblem stacked_problem(const DenseMatrix& X, const Vec& y, double lambda1, double lambda2)
{
    const Index n = X.rows(), p = X.cols();
    LassoProblem s;
    s.X.resize(n + p, p);
    s.X.topRows(n) = X;
    s.X.bottomRows(p) = std::sqrt(lambda2) * DenseMatrix::Identity(p, p);
    s.y = Vec::Zero(n + p);
    s.y.head(n) = y;
    s.lambda = lambda1;
    return s;
}

struct FitResult {
    Solution solution;
    SignedIndexSet primary_set;  // equicorrelation or boundary
    SignedIndexSet active_set;
    DfPair df;
    SetTolerance set_tol;
};

FitResult fit(const Model& m, const Vec& y, double lambda)
{
    FitResult r;
    r.set_tol = m.set_tolerance(lambda);
    switch (m.kind) {
    case Kind::lasso: {
        const LassoProblem prob{m.X, y, lambda};
        r.solution = solve_lasso(prob, m.solver);
        r.df = lasso_df(prob, r.solution, r.set_tol, m.rtol);
        r.primary_set = r.df.primary.set_used;
        r.active_set = r.df.active.set_used;
        if (!r.primary_set.degenerate) {
            reconstruct_fit_lasso_equi(prob, r.primary_set, r.solution.fit);
            reconstruct_fit_lasso_active(prob, r.active_set, r.solution.fit);
        }
        break;
    }
    case Kind::genlasso: {
        const GenLassoProblem prob{m.X, m.D, y, lambda};
        r.solution = solve_genlasso(prob, m.solver);
        r.df = genlasso_df(prob, r.solution, r.set_tol, m.rtol);
        r.primary_set = r.df.primary.set_used;
        r.active_set = r.df.active.set_used;
        if (!r.primary_set.degenerate) {
            reconstruct_fit_genlasso(prob, r.primary_set, r.solution.fit);
            reconstruct_fit_genlasso(prob, r.active_set, r.solution.fit);
        }
        break;
    }
    case Kind::elastic_net: {
        r.solution = solve_elastic_net(ElasticNetProblem{m.X, y, lambda, m.lambda2}, m.solver);
        const LassoProblem stacked = stacked_problem(m.X, y, lambda, m.lambda2);
        Solution stacked_sol = r.solution;
        stacked_sol.fit = stacked.X * r.solution.beta;
        r.primary_set = equicorrelation_set(stacked, stacked_sol, r.set_tol);
        r.active_set = active_set_lasso(r.solution, r.set_tol);
        r.df.primary = df_elastic_net(m.X, r.primary_set, m.lambda2);
        r.df.active = df_elastic_net(m.X, r.active_set, m.lambda2);
        r.df.primary.set_tolerance = r.set_tol;
        r.df.active.set_tolerance = r.set_tol;
        r.df.agree = std::abs(r.df.primary.df_value - r.df.active.df_value) <= 1e-9;
        break;
    }
    case Kind::intercept: {
        const LassoProblem centered = centered_problem(m.X, y, lambda);
        r.solution = solve_lasso_intercept(LassoProblem{m.X, y, lambda}, m.solver);
        Solution centered_sol = r.solution;
        centered_sol.fit = centered.X * r.solution.beta;
        r.primary_set = equicorrelation_set(centered, centered_sol, r.set_tol);
        r.active_set = r.primary_set.degenerate ? r.primary_set : active_set_lasso(r.solution, r.set_tol);
        r.df.primary = df_lasso_intercept(m.X, r.primary_set, m.rtol);
        r.df.active = df_lasso_intercept(m.X, r.active_set, m.rtol);
        r.df.primary.set_tolerance = r.set_tol;
        r.df.active.set_tolerance = r.set_tol;
        r.df.agree = r.df.primary.df_value == r.df.active.df_value;
        break;
    }
    }
    return r;
}

std::string kind_name(Kind k)
{
    switch (k) {
    case Kind::lasso: return "lasso";
    case Kind::genlasso: return "generalized_lasso";
    case Kind::elastic_net: return "elastic_net";
    case Kind::intercept: return "lasso_intercept";
    }
    return "unknown";
}

json problem_json(const Model& m, const Options& o, double lambda)
{
    json j{{"kind", kind_name(m.kind)}, {"n", m.X.rows()}, {"p", m.X.cols()}, {"penalty", m.penalty},
           {"lambda", lambda}};
    if (m.kind == Kind::elastic_net) j["lambda2"] = m.lambda2;
    if (m.kind == Kind::genlasso) j["penalty_rows"] = m.D.rows();
    j["x"] = o.x_path;
    return j;
}

json sets_json(const Model& m, const FitResult& r)
{
    const char* primary = m.kind == Kind::genlasso ? "boundary" : "equicorrelation";
    return json{{primary, r.primary_set}, {"active", r.active_set}, {"tolerance", r.set_tol}};
}

void emit(const Options& o, const json& j)
{
    const std::string text = j.dump(2) + "\n";
    if (o.out.empty() || o.out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(o.out);
    if (!out) throw InputError("cannot write " + o.out);
    out << text;
}

json envelope(const std::string& command)
{
    return json{{"schema", kSchema}, {"command", command}};
}

int cmd_solve(const Options& o)
{
    const Model m = load_model(o);
    const Vec y = load_y(o, m.X.rows());
    const double lambda = require_lambda(o);
    const FitResult r = fit(m, y, lambda);
    json j = envelope("solve");
    j["problem"] = problem_json(m, o, lambda);
    j["solution"] = r.solution;
    j["sets"] = sets_json(m, r);
    emit(o, j);
    return ok;
}

int cmd_df(const Options& o)
{
    const Model m = load_model(o);
    const Vec y = load_y(o, m.X.rows());
    const double lambda = require_lambda(o);
    const FitResult r = fit(m, y, lambda);
    json j = envelope("df");
    j["problem"] = problem_json(m, o, lambda);
    j["df"] = r.df.primary.df_value;
    j["primary"] = r.df.primary;
    j["active"] = r.df.active;
    j["agree"] = r.df.agree;
    j["diagnostics"] = json{{"kkt_residual", r.solution.kkt_residual}, {"iterations", r.solution.iterations}};
    emit(o, j);
    if (!r.df.agree) {
        std::cerr << "lassodof: set-based estimators disagree (" << r.df.primary.df_value << " vs "
                  << r.df.active.df_value << ")\n";
        return df_mismatch;
    }
    return ok;
}

int cmd_validate(const Options& o)
{
    const Model m = load_model(o);
    if (o.mu_path.empty()) throw InputError("--mu is required");
    const Vec mu = read_csv_vector(o.mu_path);
    if (mu.size() != m.X.rows()) throw InputError("mu length does not match the rows of X");
    const double lambda = require_lambda(o);
    const GaussianModel model{mu, o.sigma};
    McConfig cfg;
    cfg.replications = o.replications;
    cfg.seed = o.seed;
    const ValidationSummary s = mc_validate(
        [&](const Vec& y) {
            const FitResult r = fit(m, y, lambda);
            return FitWithDf{r.solution.fit, r.df.primary.df_value};
        },
        model, cfg);
    json j = envelope("validate");
    j["problem"] = problem_json(m, o, lambda);
    j["sigma"] = o.sigma;
    j["replications"] = o.replications;
    j["seed"] = o.seed;
    j["summary"] = s;
    emit(o, j);
    if (!o.replication_csv.empty()) write_replication_csv(o.replication_csv, s.records);
    if (!s.pass) {
        std::cerr << "lassodof: statistical gate failed: |difference| " << std::abs(s.difference) << " > "
                  << s.gate_multiplier << " x " << s.combined_std_error << "\n";
        return gate_failure;
    }
    return ok;
}

int cmd_sure_path(const Options& o)
{
    const Model m = load_model(o);
    const Vec y = load_y(o, m.X.rows());
    std::vector<double> grid = o.lambda_grid;
    if (grid.empty() && o.lambda) grid.push_back(*o.lambda);
    for (double l : grid) {
        if (!(l > 0.0)) throw InputError("lambda grid must be positive");
    }
    const LambdaSelection sel = select_lambda(
        [&](double lambda) {
            const FitResult r = fit(m, y, lambda);
            return FitWithDf{r.solution.fit, r.df.primary.df_value};
        },
        grid, y, o.sigma);
    json curve = json::array();
    for (const auto& pt : sel.curve) curve.push_back(json{{"lambda", pt.lambda}, {"sure", pt.risk}, {"df", pt.df}, {"ok", pt.ok}});
    json j = envelope("sure-path");
    j["problem"] = problem_json(m, o, sel.lambda);
    j["sigma"] = o.sigma;
    j["selected_lambda"] = sel.lambda;
    j["selected_index"] = sel.index;
    j["curve"] = curve;
    emit(o, j);
    if (!o.curve_csv.empty()) {
        std::ofstream out(o.curve_csv);
        if (!out) throw InputError("cannot write " + o.curve_csv);
        out << "lambda,sure,df,ok\n";
        for (const auto& pt : sel.curve) {
            out << format_double(pt.lambda) << ',' << format_double(pt.risk) << ',' << format_double(pt.df) << ','
                << (pt.ok ? 1 : 0) << '\n';
        }
    }
    return ok;
}

DenseMatrix gaussian(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> N;
    DenseMatrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) M(i, j) = N(rng);
    return M;
}

int cmd_gen_data(const Options& o)
{
    std::mt19937_64 rng(o.seed);
    DenseMatrix X;
    std::vector<std::pair<Index, Index>> pairs;
    if (o.family == "custom") {
        if (o.x_path.empty()) throw InputError("the custom family reads its design from --x");
        X = read_csv_matrix(o.x_path);
    } else {
        if (o.n < 1 || o.p < 1) throw InputError("--n and --p must be positive");
        if (o.family == "gaussian") {
            X = gaussian(o.n, o.p, rng);
        } else if (o.family == "orthogonal") {
            if (o.p > o.n) throw InputError("orthogonal family needs p <= n");
            Eigen::HouseholderQR<DenseMatrix> qr(gaussian(o.n, o.p, rng));
            X = qr.householderQ() * DenseMatrix::Identity(o.n, o.p);
        } else if (o.family == "duplicated-columns") {
            if (o.duplicate_pairs < 1 || 2 * o.duplicate_pairs > o.p) {
                throw InputError("duplicated-columns needs 1 <= pairs and 2*pairs <= p");
            }
            X = gaussian(o.n, o.p, rng);
            for (long k = 0; k < o.duplicate_pairs; ++k) {
                const Index src = 2 * k, dst = 2 * k + 1;
                X.col(dst) = X.col(src);
                pairs.emplace_back(src, dst);
            }
        } else {
            throw InputError("unknown family '" + o.family + "' (gaussian, orthogonal, duplicated-columns, custom)");
        }
    }
    const Index p = X.cols();
    const long sparsity = o.sparsity.value_or(std::min<long>(5, p));
    if (sparsity < 0 || sparsity > p) throw InputError("--sparsity must lie in [0, p]");
    if (!(o.sigma > 0.0)) throw InputError("--sigma must be positive");

    // beta* has `sparsity` nonzeros of size `signal` with random signs at random positions
    std::vector<Index> idx(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    Vec beta = Vec::Zero(p);
    std::bernoulli_distribution coin(0.5);
    for (long k = 0; k < sparsity; ++k) beta(idx[static_cast<std::size_t>(k)]) = coin(rng) ? o.signal : -o.signal;
    const Vec mu = X * beta;
    std::normal_distribution<double> N;
    Vec y = mu;
    for (Index i = 0; i < y.size(); ++i) y(i) += o.sigma * N(rng);

    namespace fs = std::filesystem;
    fs::create_directories(o.out_dir);
    const auto at = [&](const char* name) { return (fs::path(o.out_dir) / name).string(); };
    write_csv_matrix(at("X.csv"), X);
    write_csv_vector(at("y.csv"), y);
    write_csv_vector(at("mu.csv"), mu);
    write_csv_vector(at("beta.csv"), beta);
    if (!pairs.empty()) {
        std::ofstream out(at("pairs.csv"));
        for (const auto& [a, b] : pairs) out << a << ',' << b << '\n';
    }
    return ok;
}

void add_problem_flags(CLI::App* sub, Options& o, bool needs_y)
{
    sub->add_option("--x", o.x_path, "design matrix CSV")->required();
    if (needs_y) sub->add_option("--y", o.y_path, "response CSV")->required();
    sub->add_option("--d", o.penalty, "penalty: identity | chain | graph:FILE | trend:K")->capture_default_str();
    sub->add_option("--lambda2", o.lambda2, "ridge weight; selects the elastic net (identity penalty only)");
    sub->add_flag("--intercept", o.intercept, "fit an unpenalized intercept (identity penalty only)");
    sub->add_option("--tol-set", o.tol_set, "set membership tolerance (default max(1e-6, 1e-6*lambda))");
    sub->add_option("--tol-rank", o.tol_rank, "relative singular value cutoff for ranks (default max(n,p)*2^-46)");
    sub->add_option("--max-iterations", o.max_iterations, "solver iteration limit");
    sub->add_option("--out", o.out, "output JSON path, '-' for stdout")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Degrees of freedom for lasso and generalized lasso fits"};
    app.require_subcommand(1);
    Options o;

    auto* solve = app.add_subcommand("solve", "solve one problem and report the solution and its sets");
    add_problem_flags(solve, o, true);
    solve->add_option("--lambda", o.lambda, "penalty weight")->required();

    auto* df = app.add_subcommand("df", "report the set-based degrees of freedom; exits 5 if estimators disagree");
    add_problem_flags(df, o, true);
    df->add_option("--lambda", o.lambda, "penalty weight")->required();

    auto* validate = app.add_subcommand("validate", "Monte Carlo check of the df estimate against the covariance df");
    add_problem_flags(validate, o, false);
    validate->add_option("--mu", o.mu_path, "true mean CSV")->required();
    validate->add_option("--lambda", o.lambda, "penalty weight")->required();
    validate->add_option("--sigma", o.sigma, "noise standard deviation")->capture_default_str();
    validate->add_option("--replications", o.replications, "Monte Carlo replications")->capture_default_str();
    validate->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    validate->add_option("--replication-csv", o.replication_csv, "per-replication CSV output");

    auto* sure = app.add_subcommand("sure-path", "SURE over a lambda grid and the minimizing lambda");
    add_problem_flags(sure, o, true);
    sure->add_option("--lambda-grid", o.lambda_grid, "comma-separated ascending lambdas")->delimiter(',')->required();
    sure->add_option("--sigma", o.sigma, "noise standard deviation")->capture_default_str();
    sure->add_option("--curve-csv", o.curve_csv, "write the risk curve as CSV");

    auto* gen = app.add_subcommand("gen-data", "write X.csv, y.csv, mu.csv and beta.csv from a seed");
    gen->add_option("--family", o.family, "gaussian | orthogonal | duplicated-columns | custom")->capture_default_str();
    gen->add_option("--n", o.n, "rows");
    gen->add_option("--p", o.p, "columns");
    gen->add_option("--x", o.x_path, "design CSV for the custom family");
    gen->add_option("--sparsity", o.sparsity, "nonzeros in beta* (default min(5, p))");
    gen->add_option("--signal", o.signal, "magnitude of the nonzeros in beta*")->capture_default_str();
    gen->add_option("--pairs", o.duplicate_pairs, "duplicated column pairs")->capture_default_str();
    gen->add_option("--sigma", o.sigma, "noise standard deviation")->capture_default_str();
    gen->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    gen->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return input_error;
    }

    try {
        if (*solve) return cmd_solve(o);
        if (*df) return cmd_df(o);
        if (*validate) return cmd_validate(o);
        if (*sure) return cmd_sure_path(o);
        if (*gen) return cmd_gen_data(o);
    } catch (const InputError& e) {
        std::cerr << "lassodof: input error: " << e.what() << "\n";
        return input_error;
    } catch (const ConvergenceError& e) {
        std::cerr << "lassodof: convergence failure: " << e.what() << "\n";
        return convergence_failure;
    } catch (const InconsistencyError& e) {
        std::cerr << "lassodof: inconsistency: " << e.what() << "\n";
        return df_mismatch;
    } catch (const std::exception& e) {
        std::cerr << "lassodof: " << e.what() << "\n";
        return failure;
    }
    return failure;
}
