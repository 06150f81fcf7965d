#include "interplab/interpolators.hpp"

#include <cmath>
#include <sstream>

namespace interplab {

namespace {

constexpr double kCondLimit = 1e12;

void check_interpolation(const SampleSet& S, const dvec& w, const char* who) {
    const dvec r = S.apply_X(w) - S.Y;
    const double tol = 1e-8 * (1.0 + S.Y.norm());
    if (r.norm() > tol) {
        std::ostringstream os;
        os << who << ": interpolation residual " << r.norm() << " exceeds " << tol;
        throw numerical_error(os.str());
    }
}

// Best-effort Rayleigh quotient after a fixed number of power sweeps.  The
// condition check compares against 1e12, so resolving a clustered top of the
// spectrum is pointless; a certified-convergence iteration would reject
// exactly those well-conditioned clustered Grams the junk model produces.
double rayleigh_sweeps(const std::function<dvec(const dvec&)>& apply, index_t n) {
    RngStream s(0x9E3779B97F4A7C15ULL);
    dvec v(n);
    for (index_t i = 0; i < n; ++i) v(i) = s.normal();
    v.normalize();
    double r = 0.0;
    for (int it = 0; it < 64; ++it) {
        dvec av = apply(v);
        r = v.dot(av);
        const double an = av.norm();
        if (!(an > 0.0)) return r;
        v = av / an;
    }
    return r;
}

}  // namespace

double spd_condition_estimate(const dmat& A, const Eigen::LLT<dmat>& llt) {
    const index_t n = A.rows();
    if (n == 1) return 1.0;
    const auto apply_top = [&](const dvec& v) -> dvec { return A.selfadjointView<Eigen::Lower>() * v; };
    const auto apply_inv = [&](const dvec& v) -> dvec { return llt.solve(v); };
    const double top = rayleigh_sweeps(apply_top, n);
    const double inv_top = rayleigh_sweeps(apply_inv, n);
    if (!(top > 0.0) || !(inv_top > 0.0)) return std::numeric_limits<double>::infinity();
    return top * inv_top;
}

Predictor min_norm(const SampleSet& S) {
    const index_t n = S.n();
    if (S.p() < n) throw usage_error("min_norm: need p >= n");
    dmat G = S.gram();
    Eigen::LLT<dmat> llt(G);
    if (llt.info() != Eigen::Success)
        throw rank_error("min_norm: Gram matrix not positive definite");
    const double cond = spd_condition_estimate(G, llt);
    if (cond > kCondLimit) {
        std::ostringstream os;
        os << "min_norm: Gram condition estimate " << cond << " exceeds " << kCondLimit;
        throw rank_error(os.str());
    }
    Predictor pred;
    pred.w = S.apply_XT(llt.solve(S.Y));
    pred.kind = PredictorKind::min_norm;
    check_interpolation(S, pred.w, "min_norm");
    return pred;
}

Predictor ridge_signal(const SampleSet& S, double lambda) {
    if (!(lambda > 0.0)) throw usage_error("ridge_signal: lambda must be positive");
    const index_t d_S = S.X_S.cols();
    if (d_S == 0) throw domain_error("ridge_signal: empty signal block");
    const index_t n = S.n();

    dmat A = dmat::Zero(d_S, d_S);
    A.selfadjointView<Eigen::Lower>().rankUpdate(S.X_S.transpose());
    A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
    A.diagonal().array() += lambda;
    dvec w_primal = Eigen::LLT<dmat>(A).solve(S.X_S.transpose() * S.Y);

    // dual form, must agree
    dmat K = dmat::Zero(n, n);
    K.selfadjointView<Eigen::Lower>().rankUpdate(S.X_S);
    K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
    K.diagonal().array() += lambda;
    dvec w_dual = S.X_S.transpose() * Eigen::LLT<dmat>(K).solve(S.Y);

    const double scale = 1.0 + w_primal.norm();
    if ((w_primal - w_dual).norm() > 1e-8 * scale)
        throw numerical_error("ridge_signal: primal and dual solutions disagree");

    Predictor pred;
    pred.w = dvec::Zero(S.p());
    pred.w.head(d_S) = w_primal;
    pred.kind = PredictorKind::ridge_signal;
    return pred;
}

Predictor min_risk(const SampleSet& S, const PopulationModel& model) {
    model.validate();
    if (S.p() != model.p()) throw dimension_error("min_risk: p mismatch");
    const index_t n = S.n();
    if (S.p() < n) throw usage_error("min_risk: need p >= n");

    // A = X Sigma^{-1} X^T assembled blockwise to exploit the diagonal
    const dvec inv_diag = model.sigma_diag.cwiseInverse();
    dmat A = dmat::Zero(n, n);
    {
        const index_t d_S = S.X_S.cols(), d_J = S.X_J.cols();
        if (d_S > 0) {
            dmat scaled = S.X_S * inv_diag.head(d_S).cwiseSqrt().asDiagonal();
            A.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
        }
        if (d_J > 0) {
            dmat scaled = S.X_J * inv_diag.tail(d_J).cwiseSqrt().asDiagonal();
            A.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
        }
        A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
    }
    Eigen::LLT<dmat> llt(A);
    if (llt.info() != Eigen::Success)
        throw rank_error("min_risk: weighted Gram not positive definite");
    const double cond = spd_condition_estimate(A, llt);
    if (cond > kCondLimit)
        throw rank_error("min_risk: weighted Gram condition estimate too large");

    Predictor pred;
    pred.w = model.w_star + inv_diag.cwiseProduct(S.apply_XT(llt.solve(S.E)));
    pred.kind = PredictorKind::min_risk;
    check_interpolation(S, pred.w, "min_risk");
    return pred;
}

Predictor min_risk(const SampleSet& S, const ProblemSpec& spec) {
    return min_risk(S, PopulationModel::from_spec(spec));
}

SampleSet flip_junk(const SampleSet& S) {
    SampleSet out;
    out.X_S = S.X_S;
    out.X_J = -S.X_J;
    out.Y = S.Y;
    out.E = S.E;
    return out;
}

}  // namespace interplab
