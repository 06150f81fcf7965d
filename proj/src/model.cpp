#include "interplab/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace interplab {

void ProblemSpec::validate() const {
    if (d_S < 0 || d_J < 0) throw usage_error("d_S and d_J must be nonnegative");
    if (p() <= 0) throw usage_error("need at least one feature");
    if (!(lambda > 0.0)) throw usage_error("lambda must be positive");
    if (!(sigma2 >= 0.0)) throw usage_error("sigma2 must be nonnegative");
    if (w_star_S.size() != d_S) {
        std::ostringstream os;
        os << "w_star_S has length " << w_star_S.size() << ", expected d_S = " << d_S;
        throw dimension_error(os.str());
    }
}

dvec ProblemSpec::w_star_full() const {
    dvec w = dvec::Zero(p());
    w.head(d_S) = w_star_S;
    return w;
}

dvec ProblemSpec::covariance_diag() const {
    dvec d(p());
    d.head(d_S).setOnes();
    if (d_J > 0) d.tail(d_J).setConstant(junk_scale());
    return d;
}

index_t default_d_j(index_t n) { return std::max<index_t>(10 * n, 10000); }

double lambda_of_n(LambdaSchedule s, index_t n) {
    const double x = static_cast<double>(n);
    switch (s) {
        case LambdaSchedule::sqrt_n: return std::sqrt(x);
        case LambdaSchedule::log_n: return std::log(x);
        case LambdaSchedule::pow08: return std::pow(x, 0.8);
    }
    throw usage_error("unknown lambda schedule");
}

dmat SampleSet::X() const {
    dmat out(n(), p());
    out.leftCols(X_S.cols()) = X_S;
    out.rightCols(X_J.cols()) = X_J;
    return out;
}

dvec SampleSet::apply_X(const dvec& v) const {
    if (v.size() != p()) throw dimension_error("apply_X: bad vector length");
    dvec r = dvec::Zero(n());
    if (X_S.cols() > 0) r.noalias() += X_S * v.head(X_S.cols());
    if (X_J.cols() > 0) r.noalias() += X_J * v.tail(X_J.cols());
    return r;
}

dvec SampleSet::apply_XT(const dvec& r) const {
    if (r.size() != n()) throw dimension_error("apply_XT: bad vector length");
    dvec v(p());
    if (X_S.cols() > 0) v.head(X_S.cols()).noalias() = X_S.transpose() * r;
    if (X_J.cols() > 0) v.tail(X_J.cols()).noalias() = X_J.transpose() * r;
    return v;
}

dmat SampleSet::gram() const {
    dmat G = dmat::Zero(n(), n());
    if (X_S.cols() > 0) G.selfadjointView<Eigen::Lower>().rankUpdate(X_S);
    if (X_J.cols() > 0) G.selfadjointView<Eigen::Lower>().rankUpdate(X_J);
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    return G;
}

SampleSet SampleSet::from_parts(dmat X_S, dmat X_J, dvec Y, dvec E) {
    const index_t rows = Y.size();
    if (X_S.rows() != rows || X_J.rows() != rows || E.size() != rows)
        throw dimension_error("from_parts: inconsistent row counts");
    return SampleSet{std::move(X_S), std::move(X_J), std::move(Y), std::move(E)};
}

SampleSet sample_dataset(const ProblemSpec& spec, index_t n, RngStream& stream) {
    spec.validate();
    if (n < 1) throw usage_error("need n >= 1 samples");
    SampleSet S;
    S.X_S.resize(n, spec.d_S);
    S.X_J.resize(n, spec.d_J);
    // Fixed fill order (signal block, junk block, noise), column by column,
    // so a given stream always yields the same dataset.
    for (index_t j = 0; j < spec.d_S; ++j)
        for (index_t i = 0; i < n; ++i) S.X_S(i, j) = stream.normal();
    const double js = std::sqrt(spec.junk_scale());
    for (index_t j = 0; j < spec.d_J; ++j)
        for (index_t i = 0; i < n; ++i) S.X_J(i, j) = js * stream.normal();
    S.E.resize(n);
    const double sd = std::sqrt(spec.sigma2);
    for (index_t i = 0; i < n; ++i) S.E(i) = sd * stream.normal();
    S.Y = S.E;
    if (spec.d_S > 0) S.Y.noalias() += S.X_S * spec.w_star_S;
    return S;
}

SampleSet sample_dataset(const ProblemSpec& spec, index_t n, std::uint64_t seed) {
    RngStream stream(seed);
    return sample_dataset(spec, n, stream);
}

void PopulationModel::validate() const {
    if (sigma_diag.size() == 0) throw usage_error("empty covariance diagonal");
    if (w_star.size() != sigma_diag.size())
        throw dimension_error("w_star length does not match covariance diagonal");
    if ((sigma_diag.array() <= 0.0).any())
        throw usage_error("covariance diagonal must be strictly positive");
    if (!(sigma2 >= 0.0)) throw usage_error("sigma2 must be nonnegative");
}

PopulationModel PopulationModel::from_spec(const ProblemSpec& spec) {
    spec.validate();
    PopulationModel m;
    m.sigma_diag = spec.covariance_diag();
    m.w_star = spec.w_star_full();
    m.sigma2 = spec.sigma2;
    m.two_valued = spec.d_J > 0;
    m.d_S = spec.d_S;
    m.junk_scale = spec.junk_scale();
    return m;
}

PopulationModel PopulationModel::general(dvec sigma_diag, dvec w_star, double sigma2) {
    PopulationModel m;
    m.sigma_diag = std::move(sigma_diag);
    m.w_star = std::move(w_star);
    m.sigma2 = sigma2;
    m.validate();
    return m;
}

CovarianceView::CovarianceView(const PopulationModel& model, CovMode mode,
                               index_t dense_ceiling)
    : diag_(model.sigma_diag), mode_(mode), ceiling_(dense_ceiling) {
    if (mode == CovMode::dense && p() > ceiling_) {
        std::ostringstream os;
        os << "dense covariance view refused: p = " << p() << " exceeds ceiling "
           << ceiling_;
        throw usage_error(os.str());
    }
}

dmat CovarianceView::dense() const {
    if (p() > ceiling_) throw usage_error("dense covariance exceeds ceiling");
    return diag_.asDiagonal();
}

double population_risk(const dvec& w, const PopulationModel& model) {
    if (w.size() != model.p()) throw dimension_error("population_risk: bad w length");
    const dvec d = w - model.w_star;
    return model.sigma2 + model.sigma_diag.cwiseProduct(d).dot(d);
}

double population_risk(const dvec& w, const ProblemSpec& spec) {
    return population_risk(w, PopulationModel::from_spec(spec));
}

double empirical_risk(const dvec& w, const SampleSet& S) {
    const dvec r = S.apply_X(w) - S.Y;
    return r.squaredNorm() / static_cast<double>(S.n());
}

EmpiricalRiskSplit empirical_risk_split(const dvec& w, const SampleSet& S,
                                        const PopulationModel& model) {
    const double n = static_cast<double>(S.n());
    const dvec d = w - model.w_star;
    const dvec Xd = S.apply_X(d);
    EmpiricalRiskSplit split;
    split.noise_term = S.E.squaredNorm() / n;
    split.quad_term = Xd.squaredNorm() / n;
    split.cross_term = 2.0 / n * S.E.dot(Xd);
    return split;
}

PowerIterResult power_iteration(const std::function<dvec(const dvec&)>& apply,
                                index_t dim, double shift, double tol, int max_iter) {
    if (dim <= 0) throw usage_error("power_iteration: empty operator");
    // deterministic start vector from a fixed stream
    RngStream s(0x9E3779B97F4A7C15ULL);
    dvec v(dim);
    for (index_t i = 0; i < dim; ++i) v(i) = s.normal();
    v.normalize();
    double rayleigh = 0.0;
    bool have_prev = false;
    for (int it = 1; it <= max_iter; ++it) {
        dvec av = apply(v);
        const double r = v.dot(av);
        dvec w = av + shift * v;
        const double wn = w.norm();
        if (!(wn > 0.0)) throw numerical_error("power_iteration: zero iterate");
        w /= wn;
        if (have_prev && std::abs(r - rayleigh) <= tol * (1.0 + std::abs(r))) {
            return PowerIterResult{r, v, it};
        }
        rayleigh = r;
        have_prev = true;
        v = std::move(w);
    }
    std::ostringstream os;
    os << "power_iteration: no convergence in " << max_iter
       << " iterations (last Rayleigh " << rayleigh << ")";
    throw numerical_error(os.str());
}

// Exact extreme eigenvalues of D = Sigma - X^T X / n for the two-valued
// covariance.  With beta the junk variance, D = beta I + B where
// B = (1-beta) E_S E_S^T - X^T X / n has rank at most m = d_S + n and range
// spanned by V = [E_S, X^T].  The nonzero eigenvalues of B equal those of
// L^T D_w L where W = V^T V = L L^T and D_w holds the block weights, so an
// m x m symmetric eigenproblem suffices at any d_J.
CovDeviation cov_deviation_lowrank(const SampleSet& S, const PopulationModel& model,
                                   const dmat& gram) {
    model.validate();
    if (S.p() != model.p()) throw dimension_error("cov_deviation_lowrank: p mismatch");
    if (!model.two_valued)
        throw usage_error("lowrank deviation requires the two-valued covariance");
    const index_t n = S.n();
    const index_t d_S = model.d_S;
    const index_t p = model.p();
    const double beta = model.junk_scale;
    const index_t m = d_S + n;

    dmat W(m, m);
    W.topLeftCorner(d_S, d_S).setIdentity();
    W.topRightCorner(d_S, n) = S.X_S.transpose();
    W.bottomLeftCorner(n, d_S) = S.X_S;
    W.bottomRightCorner(n, n) = gram;

    Eigen::LLT<dmat> llt(W);
    if (llt.info() != Eigen::Success)
        throw rank_error("cov deviation: basis Gram not positive definite");
    dmat L = llt.matrixL();

    dvec weights(m);
    weights.head(d_S).setConstant(1.0 - beta);
    weights.tail(n).setConstant(-1.0 / static_cast<double>(n));

    dmat T = L.transpose() * weights.asDiagonal() * L;
    Eigen::SelfAdjointEigenSolver<dmat> es(T);
    if (es.info() != Eigen::Success) throw numerical_error("cov deviation: eig failed");
    const dvec theta = es.eigenvalues();

    const double lam_max = beta + std::max(theta(m - 1), 0.0);
    const double lam_min = beta + std::min(theta(0), 0.0);

    CovDeviation out;
    out.rho = lam_max;
    out.opnorm = std::max(std::abs(lam_max), std::abs(lam_min));

    // eigenvector for the top eigenvalue: v = V y with L^T y_t = z
    if (theta(m - 1) > 0.0) {
        dvec z = es.eigenvectors().col(m - 1);
        dvec y = L.transpose().triangularView<Eigen::Upper>().solve(z);
        dvec v = dvec::Zero(p);
        v.head(d_S) = y.head(d_S);
        v += S.apply_XT(y.tail(n));
        out.v_top = v.normalized();
    } else {
        // bulk eigenvalue beta is the top; any vector orthogonal to the range
        // of V attains it, but we do not need one in that regime
        out.v_top = dvec::Zero(p);
        out.rho = beta;
    }
    return out;
}

CovDeviation cov_deviation_norms(const SampleSet& S, const PopulationModel& model,
                                 DeviationMode mode, index_t dense_ceiling) {
    model.validate();
    if (S.p() != model.p()) throw dimension_error("cov_deviation_norms: p mismatch");
    const index_t p = model.p();
    const double n = static_cast<double>(S.n());

    if (mode == DeviationMode::lowrank) {
        return cov_deviation_lowrank(S, model, S.gram());
    }

    if (mode == DeviationMode::dense) {
        if (p > dense_ceiling) throw usage_error("dense deviation exceeds ceiling");
        dmat A = model.sigma_diag.asDiagonal();
        A.selfadjointView<Eigen::Lower>().rankUpdate(S.X().transpose(), -1.0 / n);
        A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
        Eigen::SelfAdjointEigenSolver<dmat> es(A);
        if (es.info() != Eigen::Success) throw numerical_error("deviation eig failed");
        CovDeviation out;
        out.rho = es.eigenvalues()(p - 1);
        out.opnorm = std::max(std::abs(es.eigenvalues()(p - 1)), std::abs(es.eigenvalues()(0)));
        out.v_top = es.eigenvectors().col(p - 1);
        return out;
    }

    // matrix-free: shifted power iterations on +/- (Sigma - Sigmahat)
    const auto apply_dev = [&](const dvec& v) -> dvec {
        dvec out = model.sigma_diag.cwiseProduct(v);
        out.noalias() -= S.apply_XT(S.apply_X(v)) / n;
        return out;
    };
    const double norm_sigma = model.sigma_diag.maxCoeff();
    // || Sigmahat || via power iteration on the PSD sample covariance
    const auto apply_hat = [&](const dvec& v) -> dvec { return S.apply_XT(S.apply_X(v)) / n; };
    const double norm_hat = power_iteration(apply_hat, p, 0.0).eigenvalue;
    const double shift = norm_sigma + std::max(norm_hat, 0.0);

    PowerIterResult top = power_iteration(apply_dev, p, shift);
    const auto apply_neg = [&](const dvec& v) -> dvec { return -apply_dev(v); };
    PowerIterResult bot = power_iteration(apply_neg, p, shift);

    CovDeviation out;
    out.rho = top.eigenvalue;
    out.opnorm = std::max(std::abs(top.eigenvalue), std::abs(bot.eigenvalue));
    out.v_top = top.vector;
    return out;
}

}  // namespace interplab
