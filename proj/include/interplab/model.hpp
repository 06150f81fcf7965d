#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "interplab/errors.hpp"
#include "interplab/rng.hpp"

namespace interplab {

using dvec = Eigen::VectorXd;
using dmat = Eigen::MatrixXd;
using index_t = Eigen::Index;

// Data model: p = d_S + d_J features.  The first d_S coordinates carry the
// signal with unit variance, the remaining d_J are junk coordinates with
// variance lambda / d_J each, so the junk block contributes total variance
// lambda regardless of d_J.  Responses are Y = X_S w_star_S + E with
// E ~ N(0, sigma2 I).
struct ProblemSpec {
    index_t d_S = 1;
    index_t d_J = 0;
    double lambda = 1.0;   // total junk variance
    double sigma2 = 1.0;   // noise variance
    dvec w_star_S;         // length d_S

    index_t p() const { return d_S + d_J; }

    double junk_scale() const { return d_J > 0 ? lambda / static_cast<double>(d_J) : 0.0; }

    // trace of the population covariance
    double trace_cov() const { return static_cast<double>(d_S) + (d_J > 0 ? lambda : 0.0); }

    void validate() const;

    dvec w_star_full() const;
    dvec covariance_diag() const;
};

// Default junk dimension for a fixed-n limit check.
index_t default_d_j(index_t n);

// lambda_n schedules
enum class LambdaSchedule { sqrt_n, log_n, pow08 };
double lambda_of_n(LambdaSchedule s, index_t n);

// One sampled dataset.  Blocks are stored separately; the assembled design
// is X = [X_S  X_J] (n x p) and is only materialized on demand.
struct SampleSet {
    dmat X_S;  // n x d_S
    dmat X_J;  // n x d_J
    dvec Y;    // n
    dvec E;    // n, retained for diagnostics and decompositions

    index_t n() const { return Y.size(); }
    index_t p() const { return X_S.cols() + X_J.cols(); }

    dmat X() const;                       // assembled n x p design
    dvec apply_X(const dvec& v) const;    // X v without assembling X
    dvec apply_XT(const dvec& r) const;   // X^T r
    dmat gram() const;                    // X X^T (n x n)

    static SampleSet from_parts(dmat X_S, dmat X_J, dvec Y, dvec E);
};

SampleSet sample_dataset(const ProblemSpec& spec, index_t n, RngStream& stream);
SampleSet sample_dataset(const ProblemSpec& spec, index_t n, std::uint64_t seed);

// Population risk parameters for a diagonal covariance:
// L(w) = sigma2 + || w - w_star ||_Sigma^2 with Sigma = diag(sigma_diag).
// Keeps the block structure around when it originates from a ProblemSpec,
// which unlocks exact low-rank shortcuts in downstream solvers.
struct PopulationModel {
    dvec sigma_diag;  // length p, strictly positive
    dvec w_star;      // length p
    double sigma2 = 0.0;

    // set when the diagonal is the two-valued junk-model covariance
    bool two_valued = false;
    index_t d_S = 0;
    double junk_scale = 0.0;

    index_t p() const { return sigma_diag.size(); }
    void validate() const;

    static PopulationModel from_spec(const ProblemSpec& spec);
    static PopulationModel general(dvec sigma_diag, dvec w_star, double sigma2);
};

enum class CovMode { dense, matrix_free };

// View over a diagonal covariance.  Matrix-free actions are O(p); the dense
// p x p matrix is only available below the configured ceiling and exists for
// oracle-style checks.
class CovarianceView {
  public:
    CovarianceView(const PopulationModel& model, CovMode mode,
                   index_t dense_ceiling = kDefaultDenseCeiling);

    index_t p() const { return diag_.size(); }
    CovMode mode() const { return mode_; }
    const dvec& diag() const { return diag_; }

    dvec apply(const dvec& v) const { return diag_.cwiseProduct(v); }
    dvec apply_sqrt(const dvec& v) const { return diag_.cwiseSqrt().cwiseProduct(v); }
    dvec apply_inv(const dvec& v) const { return v.cwiseQuotient(diag_); }
    double quad(const dvec& v) const { return diag_.cwiseProduct(v).dot(v); }

    dmat dense() const;

    static constexpr index_t kDefaultDenseCeiling = 4000;

  private:
    dvec diag_;
    CovMode mode_;
    index_t ceiling_;
};

double population_risk(const dvec& w, const PopulationModel& model);
double population_risk(const dvec& w, const ProblemSpec& spec);

double empirical_risk(const dvec& w, const SampleSet& S);

// Three-term decomposition of the empirical risk around w_star:
// L_S(w) = ||E||^2/n + ||w - w_star||_Sigmahat^2 - (2/n) <X^T E, w - w_star>.
struct EmpiricalRiskSplit {
    double noise_term;
    double quad_term;
    double cross_term;
    double total() const { return noise_term + quad_term - cross_term; }
};
EmpiricalRiskSplit empirical_risk_split(const dvec& w, const SampleSet& S,
                                        const PopulationModel& model);

// Extreme eigenvalues of the covariance deviation  Sigma - Sigmahat,
// Sigmahat = X^T X / n.  rho is the algebraically largest eigenvalue,
// opnorm the operator norm; v_top is a unit vector with Rayleigh quotient
// exactly rho (used by lower-bound witnesses).
struct CovDeviation {
    double rho;
    double opnorm;
    dvec v_top;
};

enum class DeviationMode { dense, matrix_free, lowrank };

CovDeviation cov_deviation_norms(const SampleSet& S, const PopulationModel& model,
                                 DeviationMode mode,
                                 index_t dense_ceiling = CovarianceView::kDefaultDenseCeiling);

// Low-rank path with a caller-supplied Gram matrix, for callers that already
// hold X X^T; requires the two-valued covariance.
CovDeviation cov_deviation_lowrank(const SampleSet& S, const PopulationModel& model,
                                   const dmat& gram);

// Shared power-iteration helper: algebraically largest eigenvalue of the
// symmetric operator `apply`, computed with a positive spectral shift.
// Stops when the Rayleigh quotient moves by less than tol between sweeps.
struct PowerIterResult {
    double eigenvalue;
    dvec vector;
    int iterations;
};
PowerIterResult power_iteration(const std::function<dvec(const dvec&)>& apply,
                                index_t dim, double shift, double tol = 1e-10,
                                int max_iter = 10000);

}  // namespace interplab
