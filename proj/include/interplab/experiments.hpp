#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "interplab/model.hpp"

namespace interplab {

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(trials)
    index_t trials = 0;
    uint64_t seed = 0;
};

// Runs `trials` independent evaluations of the task, one RNG substream per
// trial index, and aggregates by pairwise summation in trial order.  The
// result is bitwise identical for any worker count.  threads = 0 picks the
// hardware concurrency.  stream_offset shifts the substream indices so that
// distinct phases of an experiment draw independent randomness under one
// master seed.
McEstimate run_monte_carlo(const std::function<double(RngStream&)>& task, index_t trials,
                           uint64_t seed, int threads = 0, uint64_t stream_offset = 0);

// Vector-valued variant: the task returns `width` statistics per trial; one
// McEstimate per component, all sharing (trials, seed).
std::vector<McEstimate> run_monte_carlo_vec(const std::function<dvec(RngStream&)>& task,
                                            index_t width, index_t trials, uint64_t seed,
                                            int threads = 0, uint64_t stream_offset = 0);

struct MrRiskResult {
    McEstimate estimate;  // Monte Carlo mean of the minimal-risk interpolator's risk
    double formula = 0.0;  // (p-1) / (p-1-n) * sigma2
};

// Isotropic-covariance risk check for the minimal-risk interpolator; the risk
// distribution does not depend on the covariance, so Sigma = I is used.
MrRiskResult mr_risk_check(index_t n, index_t p, double sigma2, index_t trials, uint64_t seed,
                           int threads = 0);

struct NormLimits {
    double mr_norm2 = 0.0;  // ||w*||^2 + sigma2 n / lambda
    double mn_norm2 = 0.0;  // ||w*||^2 + sigma2 (n - d_S)/lambda + beta_n (sigma2 d_S - lambda ||w*||^2)/n
    double diff = 0.0;      // sigma2 d_S / lambda + beta_n (lambda ||w*||^2 - sigma2 d_S)/n
    double beta_n = 0.0;    // E tr((X_S^T X_S/n + (lambda/n) I)^{-1}) / d_S
    double mn_size_product = 0.0;  // mn_norm2 * (d_S + lambda) / n
};

struct NormRow {
    index_t d_j = 0;
    McEstimate mr_norm2;
    McEstimate mn_norm2;
};

struct NormCheckResult {
    NormLimits limits;
    std::vector<NormRow> rows;
};

// Closed-form large-d_J norm limits (with beta_n estimated by Monte Carlo)
// next to empirical squared norms across the d_J grid.  The spec's d_J field
// is overridden row by row.
NormCheckResult norm_limit_check(const ProblemSpec& spec, index_t n,
                                 const std::vector<index_t>& d_j_grid, index_t trials,
                                 uint64_t seed, int threads = 0);

struct AlphaRow {
    double alpha = 0.0;
    McEstimate gap;       // worst-case risk over the ball of radius alpha ||w_mn||
    double target = 0.0;  // alpha^2 sigma2
    double tolerance = 0.0;  // max(3 SE, 0.15 target)
    bool pass = false;
};

// Worst-case ball risk as a function of the budget inflation alpha >= 1.
std::vector<AlphaRow> alpha_sweep(const ProblemSpec& spec, index_t n,
                                  const std::vector<double>& alphas, index_t trials,
                                  uint64_t seed, int threads = 0);

struct FlipResult {
    McEstimate ls_tilde;     // empirical risk on the original sample
    McEstimate ld_tilde;     // population risk
    double ls_target = 0.0;  // 4 sigma2 (n - d_S) / n
    double ld_target = 0.0;  // sigma2
};

// Adversarial interpolator obtained by fitting the junk-negated sample.
FlipResult flip_experiment(const ProblemSpec& spec, index_t n, index_t trials, uint64_t seed,
                           int threads = 0);

struct DescentRow {
    index_t p = 0;
    double formula = 0.0;  // (p-1)/(p-1-n) * sigma2
    McEstimate risk;
};

// Risk of the minimal-risk interpolator across an overparameterization grid.
std::vector<DescentRow> double_descent_curve(index_t n, const std::vector<index_t>& p_grid,
                                             double sigma2, index_t trials, uint64_t seed,
                                             int threads = 0);

struct SweepRow {
    index_t n = 0;
    double lambda = 0.0;
    index_t d_j = 0;
    McEstimate excess_mn;      // L_D(w_mn) - sigma2
    McEstimate excess_ridge;   // L_D(ridge at lambda_n) - sigma2
    McEstimate dev_product;    // ||Sigma - Sigmahat|| ||w_mn||^2
    McEstimate kappa_product;  // kappa ||w_mn||^2
};

// Consistency of the min-norm interpolator alongside the divergence of the
// uniform bound certificates, across a growing-n grid with lambda_n from the
// schedule and d_J = d_j_factor * n.
std::vector<SweepRow> consistency_divergence_sweep(const ProblemSpec& tmpl,
                                                   const std::vector<index_t>& n_grid,
                                                   LambdaSchedule schedule, index_t d_j_factor,
                                                   index_t trials, uint64_t seed,
                                                   int threads = 0);

struct RidgeEquivRow {
    index_t d_j = 0;
    McEstimate signal_err;  // || (w_mn)_S - ridge ||
    McEstimate junk_pred;   // |<(w_mn)_J, fresh x_J>|
    McEstimate ridge_norm;  // || ridge ||, scale reference for the error
};

// Convergence of the min-norm signal block to explicit ridge as d_J grows.
std::vector<RidgeEquivRow> ridge_equivalence_curve(const ProblemSpec& spec, index_t n,
                                                   const std::vector<index_t>& d_j_grid,
                                                   index_t trials, uint64_t seed,
                                                   int threads = 0);

}  // namespace interplab
