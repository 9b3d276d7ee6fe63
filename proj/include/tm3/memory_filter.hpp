#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "tm3/features.hpp"

namespace tm3 {

/// Momentum schedule of the accelerated proximal gradient loop.
enum class MomentumRule {
    /// l' = (1 + sqrt(1 + l^2)) / 2, extrapolation weight (l - 1) / l'.
    printed,
    /// l' = (1 + sqrt(1 + 4 l^2)) / 2 (Beck-Teboulle), same extrapolation weight.
    fista,
};

/// Reliability-weighted group lasso with graph smoothing over N_s past results:
///
///   min_S  1/2 ||X - X S||_F^2 + delta tr(S^T L S) + beta sum_i ||S_i.||_2 / (h_i + epsilon)
///
/// X is d x N_s, one column per result.
struct SelectionProblem {
    Eigen::MatrixXd X;
    Eigen::VectorXd h;
    double beta = 10.0;
    double delta = 5.0;
    double sigma2 = 2.0;
    double epsilon = 1e-6;
    double stop_tol = 1e-6;
    int max_iters = 5000;
    int cap_c = 4;
    MomentumRule momentum = MomentumRule::printed;
    /// Divide the extrapolation step by the iteration counter instead of the
    /// next momentum value. Kept for comparison only; the first step is 0/0,
    /// which is treated as zero.
    bool divide_by_iteration = false;
    bool record_trace = false;

    Eigen::Index size() const { return X.cols(); }
};

struct SelectionSolution {
    Eigen::MatrixXd S;
    Eigen::VectorXd row_norms;
    Eigen::Index selected_index = 0;
    std::vector<double> objective_trace;
    std::vector<Eigen::VectorXd> row_norm_trace;  // filled when record_trace is set
    int iterations_used = 0;
    bool converged = false;
    double lipschitz = 0.0;

    /// Indices of the k largest row norms, ties by lower index.
    std::vector<Eigen::Index> top_k(std::size_t k) const;
};

/// Rescales every nonzero column of X to norm sqrt(N_s), the scale the default
/// beta and delta expect. With unit columns and N_s = 10 a row survives the
/// first shrinkage only for h above about 3, so S = 0 wins outright.
void scale_selection_columns(Eigen::MatrixXd& X);

/// W_ij = exp(-r s / sigma2) when columns i and j are mutual neighbors within
/// rank cap_c (r: rank of j among i's neighbors, s: rank of i among j's),
/// zero otherwise. A column is never its own neighbor.
Eigen::MatrixXd build_weight_matrix(const Eigen::MatrixXd& X, double sigma2, int cap_c);

/// L = D - W with D the diagonal of row sums.
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& W);

/// Spectral radius of X^T X + delta (L + L^T), by power iteration.
double lipschitz_constant(const Eigen::MatrixXd& X, double delta, const Eigen::MatrixXd& L,
                          double rel_tol = 1e-8, int max_iters = 100000);

/// X^T X S - X^T X + delta (L + L^T) S.
Eigen::MatrixXd gradient_f(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X, double delta,
                           const Eigen::MatrixXd& L);

/// Row-wise soft threshold with threshold beta / (p_L (h_i + epsilon)).
Eigen::MatrixXd prox_group_lasso(const Eigen::MatrixXd& Z, const Eigen::VectorXd& h, double beta,
                                 double epsilon, double p_L);

double smooth_part(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X, double delta, const Eigen::MatrixXd& L);
double group_penalty(const Eigen::MatrixXd& S, const Eigen::VectorXd& h, double beta, double epsilon);
double objective(const Eigen::MatrixXd& S, const SelectionProblem& problem, const Eigen::MatrixXd& L);
double objective(const Eigen::MatrixXd& S, const SelectionProblem& problem);

/// Sum of row 2-norms.
double norm_12(const Eigen::MatrixXd& S);

SelectionSolution solve_selection(const SelectionProblem& problem);

/// iteration,objective,row_norm_0,...,row_norm_{N_s-1}
void write_trace_csv(std::ostream& os, const SelectionSolution& sol);

/// Bounded first-in first-out store of representative feature vectors.
class TemplateDictionary {
public:
    explicit TemplateDictionary(std::size_t capacity = 12);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    const Eigen::VectorXd& operator[](std::size_t k) const { return atoms_[k]; }
    const std::deque<Eigen::VectorXd>& atoms() const { return atoms_; }

    /// Appends, evicting the oldest atom when full.
    void push(Eigen::VectorXd atom);

private:
    std::size_t capacity_;
    std::deque<Eigen::VectorXd> atoms_;
};

TemplateDictionary update_dictionary(TemplateDictionary dict, Eigen::VectorXd selected);

struct Reconstruction {
    Eigen::VectorXd template_vector;       // combination of dictionary atoms only
    Eigen::VectorXd full_fit;              // including trivial templates
    std::vector<std::size_t> atoms_used;   // dictionary indices
    std::vector<Eigen::Index> trivial_used;  // coordinates of unit vectors
    Eigen::VectorXd coefficients;          // atoms first, then trivial templates
};

/// Least-squares fit of `result` on its k nearest codebook entries, where the
/// codebook is the dictionary plus unit vectors ("trivial templates"). Only
/// the trivial_count unit vectors closest to the result are admitted. The
/// returned template keeps the dictionary part of the fit; whatever the unit
/// vectors absorbed (occluder pixels, spikes) is dropped.
Reconstruction reconstruct_template_r(const Eigen::VectorXd& result, const TemplateDictionary& dict, int k,
                                      Eigen::Index trivial_count, double ridge = 1e-6);

struct TemplatePair {
    PatchSet tmpl_r;
    PatchSet tmpl_e;
};

struct TemplateEUpdate {
    TemplatePair templates;
    bool replaced = false;
    bool invalid_score = false;
};

/// Replaces tmpl_e with `result` iff score > threshold. NaN scores leave the
/// pair unchanged and are flagged.
TemplateEUpdate maybe_update_template_e(const TemplatePair& current, const PatchSet& result, double score,
                                        double threshold = 0.5);

}  // namespace tm3
