#include "tm3/memory_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Cholesky>

#include "tm3/error.hpp"
#include "tm3/similarity.hpp"

namespace tm3 {

std::vector<Eigen::Index> SelectionSolution::top_k(std::size_t k) const
{
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(row_norms.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return row_norms(a) > row_norms(b); });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

Eigen::MatrixXd build_weight_matrix(const Eigen::MatrixXd& X, double sigma2, int cap_c)
{
    const Eigen::Index n = X.cols();
    require(n >= 2, "build_weight_matrix: need at least two columns");
    require(sigma2 > 0.0 && cap_c >= 1, "build_weight_matrix: invalid kernel width or rank cap");

    // rank(i, j): 1-based rank of column j among the neighbors of column i.
    Eigen::MatrixXi rank = Eigen::MatrixXi::Zero(n, n);
    std::vector<Neighbor> nbrs;
    for (Eigen::Index i = 0; i < n; ++i) {
        nbrs.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) nbrs.push_back({squared_distance(X.col(i), X.col(j)), j});
        std::sort(nbrs.begin(), nbrs.end());
        for (std::size_t r = 0; r < nbrs.size(); ++r) rank(i, nbrs[r].index) = static_cast<int>(r + 1);
    }
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const int r = rank(i, j), s = rank(j, i);
            if (r <= cap_c && s <= cap_c) W(i, j) = std::exp(-static_cast<double>(r) * s / sigma2);
        }
    }
    return W;
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& W)
{
    require(W.rows() == W.cols(), "laplacian: W must be square");
    Eigen::MatrixXd L = -W;
    L.diagonal() += W.rowwise().sum();
    return L;
}

void scale_selection_columns(Eigen::MatrixXd& X)
{
    const double target = std::sqrt(static_cast<double>(X.cols()));
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const double n = X.col(i).norm();
        if (n > 0.0) X.col(i) *= target / n;
    }
}

double lipschitz_constant(const Eigen::MatrixXd& X, double delta, const Eigen::MatrixXd& L, double rel_tol,
                          int max_iters)
{
    const Eigen::Index n = X.cols();
    require(L.rows() == n && L.cols() == n, "lipschitz_constant: L must be N_s x N_s");
    const Eigen::MatrixXd A = X.transpose() * X + delta * (L + L.transpose());

    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = 1.0 + static_cast<double>(k + 1) / static_cast<double>(n + 1);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd w = A * v;
        const double next = v.dot(w);
        const double wn = w.norm();
        if (wn == 0.0) return 0.0;
        v = w / wn;
        if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // A is symmetric PSD, so the Rayleigh quotient at the dominant eigenvector is the spectral radius.
    return std::abs(v.dot(A * v));
}

Eigen::MatrixXd gradient_f(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X, double delta,
                           const Eigen::MatrixXd& L)
{
    const Eigen::MatrixXd G = X.transpose() * X;
    return G * S - G + delta * (L + L.transpose()) * S;
}

Eigen::MatrixXd prox_group_lasso(const Eigen::MatrixXd& Z, const Eigen::VectorXd& h, double beta, double epsilon,
                                 double p_L)
{
    require(h.size() == Z.rows(), "prox_group_lasso: one score per row required");
    require(p_L > 0.0, "prox_group_lasso: Lipschitz constant must be positive");
    Eigen::MatrixXd S = Z;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const double norm = Z.row(i).norm();
        const double thresh = beta / (p_L * (h(i) + epsilon));
        const double factor = norm > 0.0 ? std::max(1.0 - thresh / norm, 0.0) : 0.0;
        S.row(i) *= factor;
    }
    return S;
}

double norm_12(const Eigen::MatrixXd& S) { return S.rowwise().norm().sum(); }

double smooth_part(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X, double delta, const Eigen::MatrixXd& L)
{
    return 0.5 * (X - X * S).squaredNorm() + delta * (S.transpose() * L * S).trace();
}

double group_penalty(const Eigen::MatrixXd& S, const Eigen::VectorXd& h, double beta, double epsilon)
{
    return beta * (S.rowwise().norm().array() / (h.array() + epsilon)).sum();
}

double objective(const Eigen::MatrixXd& S, const SelectionProblem& problem, const Eigen::MatrixXd& L)
{
    return smooth_part(S, problem.X, problem.delta, L) + group_penalty(S, problem.h, problem.beta, problem.epsilon);
}

double objective(const Eigen::MatrixXd& S, const SelectionProblem& problem)
{
    return objective(S, problem, laplacian(build_weight_matrix(problem.X, problem.sigma2, problem.cap_c)));
}

SelectionSolution solve_selection(const SelectionProblem& problem)
{
    const Eigen::Index n = problem.size();
    require(n >= 2, "solve_selection: need at least two results");
    require(problem.h.size() == n, "solve_selection: one reliability score per result required");
    require(problem.X.allFinite() && problem.h.allFinite(), "solve_selection: non-finite data");
    require((problem.h.array() >= 0.0).all(), "solve_selection: reliability scores must be non-negative");
    require(problem.beta >= 0.0 && problem.delta >= 0.0, "solve_selection: beta and delta must be non-negative");
    require(problem.epsilon > 0.0, "solve_selection: epsilon must be positive");
    require(problem.max_iters >= 1, "solve_selection: max_iters must be >= 1");

    const Eigen::MatrixXd L = laplacian(build_weight_matrix(problem.X, problem.sigma2, problem.cap_c));
    const Eigen::MatrixXd G = problem.X.transpose() * problem.X;
    const Eigen::MatrixXd Lsym = problem.delta * (L + L.transpose());
    double pL = lipschitz_constant(problem.X, problem.delta, L);
    if (!(pL > 0.0)) pL = std::numeric_limits<double>::min();

    SelectionSolution sol;
    sol.lipschitz = pL;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd U = S;
    Eigen::MatrixXd best = S;
    double best_obj = std::numeric_limits<double>::infinity();
    double l = 1.0;

    for (int t = 0; t < problem.max_iters; ++t) {
        const Eigen::MatrixXd Z = U - (G * U - G + Lsym * U) / pL;
        Eigen::MatrixXd next = prox_group_lasso(Z, problem.h, problem.beta, problem.epsilon, pL);

        const double l_next = problem.momentum == MomentumRule::fista ? 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * l * l))
                                                                       : 0.5 * (1.0 + std::sqrt(1.0 + l * l));
        const double tau = l - 1.0;
        double weight = tau / l_next;
        if (problem.divide_by_iteration) weight = t == 0 ? 0.0 : tau / static_cast<double>(t);
        U = next + weight * (next - S);
        l = l_next;

        const double change = norm_12(next - S);
        const double size = norm_12(next);
        S = std::move(next);
        sol.iterations_used = t + 1;

        const double obj = objective(S, problem, L);
        sol.objective_trace.push_back(obj);
        if (problem.record_trace) sol.row_norm_trace.push_back(S.rowwise().norm());
        if (obj < best_obj) {
            best_obj = obj;
            best = S;
        }
        if (change == 0.0 || (size > 0.0 && change / size <= problem.stop_tol)) {
            sol.converged = true;
            break;
        }
    }

    sol.S = sol.converged ? S : best;
    sol.row_norms = sol.S.rowwise().norm();
    sol.selected_index = sol.top_k(1).front();
    return sol;
}

void write_trace_csv(std::ostream& os, const SelectionSolution& sol)
{
    const Eigen::Index n = sol.row_norms.size();
    os << "iteration,objective";
    for (Eigen::Index i = 0; i < n; ++i) os << ",row_norm_" << i;
    os << '\n';
    for (std::size_t t = 0; t < sol.objective_trace.size(); ++t) {
        os << t + 1 << ',' << sol.objective_trace[t];
        if (t < sol.row_norm_trace.size())
            for (Eigen::Index i = 0; i < sol.row_norm_trace[t].size(); ++i) os << ',' << sol.row_norm_trace[t](i);
        os << '\n';
    }
}

TemplateDictionary::TemplateDictionary(std::size_t capacity) : capacity_(capacity)
{
    require(capacity >= 1, "TemplateDictionary: capacity must be >= 1");
}

void TemplateDictionary::push(Eigen::VectorXd atom)
{
    if (!atoms_.empty()) require(atom.size() == atoms_.front().size(), "TemplateDictionary: atom dimension mismatch");
    if (atoms_.size() == capacity_) atoms_.pop_front();
    atoms_.push_back(std::move(atom));
}

TemplateDictionary update_dictionary(TemplateDictionary dict, Eigen::VectorXd selected)
{
    dict.push(std::move(selected));
    return dict;
}

Reconstruction reconstruct_template_r(const Eigen::VectorXd& result, const TemplateDictionary& dict, int k,
                                      Eigen::Index trivial_count, double ridge)
{
    require(!dict.empty(), "reconstruct_template_r: empty dictionary");
    require(k >= 1, "reconstruct_template_r: k must be >= 1");
    require(trivial_count >= 0, "reconstruct_template_r: trivial_count must be non-negative");
    const Eigen::Index d = result.size();
    require(dict[0].size() == d, "reconstruct_template_r: dimension mismatch");

    // Codebook entries are (distance^2, id); ids < dict.size() are atoms,
    // the rest map to unit-vector coordinates.
    struct Entry {
        double dist2;
        std::size_t id;
        Eigen::Index coord;
    };
    std::vector<Entry> codebook;
    for (std::size_t a = 0; a < dict.size(); ++a)
        codebook.push_back({squared_distance(result, dict[a]), a, -1});

    if (trivial_count > 0) {
        // ||result - e_m||^2 = ||result||^2 - 2 result_m + 1, so the closest
        // unit vectors sit at the largest coordinates.
        const double base = result.squaredNorm() + 1.0;
        std::vector<Eigen::Index> coords(static_cast<std::size_t>(d));
        std::iota(coords.begin(), coords.end(), Eigen::Index{0});
        const auto take = static_cast<std::size_t>(std::min(trivial_count, d));
        std::partial_sort(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(take), coords.end(),
                          [&](Eigen::Index a, Eigen::Index b) {
                              return result(a) > result(b) || (result(a) == result(b) && a < b);
                          });
        for (std::size_t t = 0; t < take; ++t)
            codebook.push_back({base - 2.0 * result(coords[t]), dict.size() + t, coords[t]});
    }
    std::stable_sort(codebook.begin(), codebook.end(), [](const Entry& a, const Entry& b) {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.id < b.id);
    });
    codebook.resize(std::min(codebook.size(), static_cast<std::size_t>(k)));

    Reconstruction rec;
    for (const auto& e : codebook) {
        if (e.coord < 0)
            rec.atoms_used.push_back(e.id);
        else
            rec.trivial_used.push_back(e.coord);
    }
    const auto na = static_cast<Eigen::Index>(rec.atoms_used.size());
    const auto nt = static_cast<Eigen::Index>(rec.trivial_used.size());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, na + nt);
    for (Eigen::Index c = 0; c < na; ++c) B.col(c) = dict[rec.atoms_used[static_cast<std::size_t>(c)]];
    for (Eigen::Index c = 0; c < nt; ++c) B(rec.trivial_used[static_cast<std::size_t>(c)], na + c) = 1.0;

    Eigen::MatrixXd gram = B.transpose() * B;
    gram.diagonal().array() += ridge;
    rec.coefficients = gram.ldlt().solve(B.transpose() * result);
    rec.full_fit = B * rec.coefficients;
    rec.template_vector = B.leftCols(na) * rec.coefficients.head(na);
    return rec;
}

TemplateEUpdate maybe_update_template_e(const TemplatePair& current, const PatchSet& result, double score,
                                        double threshold)
{
    TemplateEUpdate out{current, false, false};
    if (std::isnan(score)) {
        out.invalid_score = true;
        return out;
    }
    if (score > threshold) {
        require(result.dim() == current.tmpl_e.dim() || current.tmpl_e.count() == 0,
                "maybe_update_template_e: dimension mismatch");
        out.templates.tmpl_e = result;
        out.replaced = true;
    }
    return out;
}

}  // namespace tm3
