#pragma once

#include "interplab/model.hpp"

namespace interplab {

enum class PredictorKind { min_norm, ridge_signal, min_risk, other };

struct Predictor {
    dvec w;
    PredictorKind kind = PredictorKind::other;

    dvec signal_part(const SampleSet& S) const { return w.head(S.X_S.cols()); }
    dvec junk_part(const SampleSet& S) const { return w.tail(S.X_J.cols()); }
};

// Interpolator of minimal Euclidean norm, w = X^T (X X^T)^{-1} Y.
// Solves the n x n Gram system; the p x p normal equations are never formed.
// Raises rank_error when the Gram matrix is numerically singular
// (condition estimate above 1e12).
Predictor min_norm(const SampleSet& S);

// Ridge estimator on the signal block only, embedded into R^p with zero junk
// coordinates.  Computed from the primal d_S x d_S system and cross-checked
// against the dual n x n form X_S^T (X_S X_S^T + lambda I)^{-1} Y.
Predictor ridge_signal(const SampleSet& S, double lambda);

// Interpolator minimizing the population risk:
// w = w_star + Sigma^{-1} X^T (X Sigma^{-1} X^T)^{-1} E.
Predictor min_risk(const SampleSet& S, const PopulationModel& model);
Predictor min_risk(const SampleSet& S, const ProblemSpec& spec);

// Adversarial junk negation: returns the same dataset with X_J replaced by
// -X_J.  Signal block, responses and noise are shared (no copy-on-write
// subtleties; blocks are value copies).
SampleSet flip_junk(const SampleSet& S);

// Condition estimate of an SPD matrix given its Cholesky factorization,
// via power iterations on A and A^{-1}.
double spd_condition_estimate(const dmat& A, const Eigen::LLT<dmat>& llt);

}  // namespace interplab
