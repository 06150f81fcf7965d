#pragma once

#include <limits>

#include "interplab/interpolators.hpp"
#include "interplab/model.hpp"

namespace interplab {

// Orthonormal view of ker(X).  Dense mode stores an explicit basis F
// (p x (p-n), columns orthonormal, X F = 0) taken from the full SVD of X.
// Matrix-free mode exposes only the orthogonal projector onto the kernel,
// v -> v - X^T (X X^T)^{-1} X v, and keeps a pointer to the sample set,
// which must outlive the view.
class KernelView {
  public:
    enum class Mode { dense, matrix_free };

    Mode mode() const { return mode_; }
    index_t n() const { return n_; }
    index_t p() const { return p_; }
    index_t kernel_dim() const { return p_ - n_; }

    const dmat& basis() const;            // dense mode only
    dvec project(const dvec& v) const;    // both modes

    friend KernelView kernel_basis(const SampleSet& S, Mode mode, index_t dense_ceiling);

  private:
    Mode mode_ = Mode::dense;
    index_t n_ = 0, p_ = 0;
    dmat F_;
    const SampleSet* S_ = nullptr;
    Eigen::LLT<dmat> gram_llt_;
};

KernelView kernel_basis(const SampleSet& S, KernelView::Mode mode,
                        index_t dense_ceiling = CovarianceView::kDefaultDenseCeiling);

// kappa = || F^T Sigma F ||, the largest covariance eigenvalue restricted to
// the kernel of the design.
double restricted_eigenvalue(const KernelView& K, const dvec& sigma_diag);

// Large-d_J limit of kappa for the junk model:
// (lambda/n) || (X_S^T X_S / n + (lambda/n) I)^{-1} ||.
// Undefined when the signal block is empty.
double kappa_limit_formula(const dmat& X_S, double lambda);

enum class GapMode { dense, matrix_free, auto_select };
enum class GapPath { dense, two_valued, conjugate_gradient, short_circuit };

struct GapResult {
    double value = 0.0;        // sup of population risk over feasible interpolators
    double lambda_star = 0.0;  // dual minimizer, +inf in the degenerate case
    double kappa = 0.0;
    double anchor_risk = 0.0;
    double excess_budget = 0.0;  // B^2 - ||anchor||^2 (clamped at zero)
    bool hard_case = false;
    bool degenerate = false;  // zero excess budget and anchor already kernel-orthogonal
    GapPath path = GapPath::dense;
};

// Exact worst-case population risk over interpolators within the Euclidean
// ball of radius B, anchored at an interpolating point:
//   sup { L(w) : X w = Y, ||w|| <= B }.
// Solved through the single-constraint dual, a convex 1-d minimization over
// lambda > kappa.  The anchor must interpolate and satisfy ||anchor|| <= B.
GapResult worst_case_gap(const SampleSet& S, const PopulationModel& model,
                         const dvec& anchor, double B,
                         GapMode mode = GapMode::auto_select);

// Independent low-dimensional check: enumerates the feasible set directly.
// Supports kernel dimension 1 (interval endpoints plus the stationary point)
// and 2 (fine angular grid on the feasible circle, locally refined).
double brute_force_gap_oracle(const SampleSet& S, const PopulationModel& model,
                              const dvec& anchor, double B, int grid = 10000);

struct MrDecomposition {
    GapResult gap;
    double gamma_n = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;
    double mr_norm2 = 0.0;
    double mn_norm2 = 0.0;
    double orthogonality_residual = 0.0;  // || F^T Sigma (w_mr - w_star) ||
};

// Worst case anchored at the minimal-risk interpolator with budget equal to
// its own norm; gamma_n is the dual tightness ratio
// (value - L(w_mr)) / (kappa (||w_mr||^2 - ||w_mn||^2)), degenerate when the
// denominator falls below 1e-14.
MrDecomposition gap_decomposition_mr(const SampleSet& S, const PopulationModel& model,
                                     GapMode mode = GapMode::auto_select);

struct BallDecomposition {
    GapResult gap;
    double anchor_ld = 0.0;   // population risk of the min-norm anchor
    double remainder = 0.0;   // R = value - L(w_mn) - kappa (B^2 - ||w_mn||^2)
    double remainder_bound = 0.0;
    double kernel_residual = 0.0;  // || F^T w_mn ||
};

// Worst case anchored at the min-norm interpolator with an explicit budget
// B >= ||w_mn||.
BallDecomposition gap_decomposition_ball(const SampleSet& S, const PopulationModel& model,
                                         double B, GapMode mode = GapMode::auto_select);

struct BallGapBound {
    double one_sided = 0.0;  // rho(Sigma - Sigmahat) (||w_mn|| - ||w_star||)^2 + (sigma2 - ||E||^2/n)
    double two_sided = 0.0;  // ||Sigma - Sigmahat|| (...)^2 - |sigma2 - ||E||^2/n|
    double witness_gap = std::numeric_limits<double>::quiet_NaN();
    dvec witness;
    bool witness_valid = false;
};

// Lower bounds on the norm-ball uniform gap sup_{||w|| <= ||w_mn||} (L - L_S),
// with an explicit certifying parameter vector when ||w_mn|| >= ||w_star||.
BallGapBound ball_gap_lower_bound(const SampleSet& S, const PopulationModel& model,
                                  DeviationMode mode = DeviationMode::dense);

struct ClassicalBounds {
    double rademacher = 0.0;  // sqrt(B^2 tr(Sigma) / n)
    double star_trace = 0.0;  // B^2 tr(Sigma) / n
    double star_kappa = 0.0;  // kappa B^2
};

ClassicalBounds classical_bounds(double B, index_t n, double trace_cov, double kappa);

}  // namespace interplab
