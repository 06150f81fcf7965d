#include "interplab/gap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "interplab/errors.hpp"

namespace interplab {

namespace {

// One aggregated spectral component of the dual objective:
//   phi(lambda) = sum_i (a2_i lambda^2 + 2 ac_i lambda + c2_i) / (lambda - mu_i)
//                 + lambda * excess.
struct DualTerm {
    double mu;
    double a2;
    double ac;
    double c2;
};

double term_numerator(const DualTerm& t, double lambda) {
    // ||lambda a + c||^2 restricted to the component; clamp roundoff.
    return std::max(0.0, t.a2 * lambda * lambda + 2.0 * t.ac * lambda + t.c2);
}

struct DualSolution {
    double value = 0.0;  // inf phi, without the anchor risk offset
    double lambda_star = 0.0;
    bool hard_case = false;
};

constexpr double kLambdaRelTol = 1e-12;
constexpr double kPoleGuard = 1e-10;
constexpr double kBracketCap = 1e3;
constexpr double kHardCaseTol = 1e-10;

template <typename F>
std::pair<double, double> golden_minimize(F&& f, double lo, double hi) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double invphi2 = (3.0 - std::sqrt(5.0)) / 2.0;
    double a = lo, b = hi;
    double h = b - a;
    double x1 = a + invphi2 * h;
    double x2 = a + invphi * h;
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 400 && h > kLambdaRelTol * (1.0 + std::abs(b)); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            h = b - a;
            x1 = a + invphi2 * h;
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            h = b - a;
            x2 = a + invphi * h;
            f2 = f(x2);
        }
    }
    double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

// Minimize the explicit rational dual over lambda > kappa.  The terms carry
// the spectral data of F^T Sigma F together with the components of the anchor
// and of -F^T Sigma (anchor - w_star).
DualSolution solve_dual(const std::vector<DualTerm>& terms, double kappa, double excess) {
    auto phi = [&](double lambda) {
        double s = lambda * excess;
        for (const auto& t : terms) s += term_numerator(t, lambda) / (lambda - t.mu);
        return s;
    };
    auto dphi = [&](double lambda) {
        double s = excess;
        for (const auto& t : terms) {
            double d = lambda - t.mu;
            s += (2.0 * t.a2 * lambda + 2.0 * t.ac) / d - term_numerator(t, lambda) / (d * d);
        }
        return s;
    };

    // Residual of lambda a + c on the top eigenspace at lambda = kappa; when it
    // vanishes the pole cancels and the minimum can sit at kappa itself.
    const double cluster_tol = kHardCaseTol * (1.0 + kappa);
    double top_num = 0.0, all_num = 0.0;
    for (const auto& t : terms) {
        double num = term_numerator(t, kappa);
        all_num += num;
        if (t.mu >= kappa - cluster_tol) top_num += num;
    }
    const double hard_thresh = kHardCaseTol * (1.0 + std::sqrt(all_num));

    if (std::sqrt(top_num) <= hard_thresh) {
        // Deflate the top cluster: its contribution is linear through kappa.
        std::vector<DualTerm> rest;
        double a2_top = 0.0;
        for (const auto& t : terms) {
            if (t.mu >= kappa - cluster_tol) {
                a2_top += t.a2;
            } else {
                rest.push_back(t);
            }
        }
        auto phi_d = [&](double lambda) {
            double s = a2_top * (lambda - kappa) + lambda * excess;
            for (const auto& t : rest) s += term_numerator(t, lambda) / (lambda - t.mu);
            return s;
        };
        auto dphi_d = [&](double lambda) {
            double s = a2_top + excess;
            for (const auto& t : rest) {
                double d = lambda - t.mu;
                s += (2.0 * t.a2 * lambda + 2.0 * t.ac) / d - term_numerator(t, lambda) / (d * d);
            }
            return s;
        };
        if (dphi_d(kappa) >= 0.0) {
            return {phi_d(kappa), kappa, true};
        }
        double delta = 1e-6 * (1.0 + kappa);
        while (dphi_d(kappa + delta) < 0.0) {
            delta *= 2.0;
            if (delta > kBracketCap * (1.0 + kappa))
                throw numerical_error("dual bracket expansion exceeded its cap in the hard case");
        }
        auto sol = golden_minimize(phi_d, kappa, kappa + delta);
        return {sol.second, sol.first, true};
    }

    const double lo = kappa + kPoleGuard * (1.0 + kappa);
    double delta = 1e-6 * (1.0 + kappa);
    while (dphi(kappa + delta) < 0.0) {
        delta *= 2.0;
        if (delta > kBracketCap * (1.0 + kappa))
            throw numerical_error(
                "dual bracket expansion exceeded its cap; objective appears unbounded");
    }
    double hi = kappa + delta;
    auto sol = golden_minimize(phi, lo, std::max(hi, lo * (1.0 + 1e-15)));
    return {sol.second, sol.first, false};
}

void check_anchor(const SampleSet& S, const dvec& anchor, double B) {
    if (anchor.size() != S.p())
        throw dimension_error("anchor length does not match the parameter dimension");
    dvec resid = S.apply_X(anchor) - S.Y;
    double tol = 1e-8 * (1.0 + S.Y.norm());
    if (resid.norm() > tol)
        throw precondition_error("anchor does not interpolate: residual " +
                                 std::to_string(resid.norm()) + " exceeds " + std::to_string(tol));
    double na = anchor.norm();
    if (na > B * (1.0 + 1e-12) + 1e-12)
        throw precondition_error("anchor norm " + std::to_string(na) +
                                 " exceeds the budget " + std::to_string(B));
}

GapResult finish_degenerate(double anchor_risk, double kappa, GapPath path) {
    GapResult r;
    r.value = anchor_risk;
    r.lambda_star = std::numeric_limits<double>::infinity();
    r.kappa = kappa;
    r.anchor_risk = anchor_risk;
    r.excess_budget = 0.0;
    r.degenerate = true;
    r.path = path;
    return r;
}

bool is_degenerate(double excess, double B, double kernel_norm2, double anchor_norm) {
    double a_tol = 1e-12 * (1.0 + anchor_norm);
    return excess <= 1e-12 * (1.0 + B * B) && kernel_norm2 <= a_tol * a_tol;
}

GapResult gap_dense(const SampleSet& S, const PopulationModel& model, const dvec& anchor,
                    double B) {
    const index_t p = S.p();
    KernelView K = kernel_basis(S, KernelView::Mode::dense, p);
    const dmat& F = K.basis();
    const index_t k = K.kernel_dim();

    dmat M = F.transpose() * model.sigma_diag.asDiagonal() * F;
    Eigen::SelfAdjointEigenSolver<dmat> es(M);
    if (es.info() != Eigen::Success)
        throw numerical_error("eigendecomposition of the restricted covariance failed");
    const dvec& mu = es.eigenvalues();
    double kappa = mu(k - 1);

    dvec diff = anchor - model.w_star;
    dvec aQ = es.eigenvectors().transpose() * (F.transpose() * anchor);
    dvec cQ = es.eigenvectors().transpose() *
              (F.transpose() * (-(model.sigma_diag.cwiseProduct(diff)).eval()));

    double anchor_risk = model.sigma2 + diff.dot(model.sigma_diag.cwiseProduct(diff));
    double excess = std::max(0.0, B * B - anchor.squaredNorm());

    if (is_degenerate(excess, B, aQ.squaredNorm(), anchor.norm()))
        return finish_degenerate(anchor_risk, kappa, GapPath::dense);

    std::vector<DualTerm> terms;
    terms.reserve(static_cast<size_t>(k));
    for (index_t i = 0; i < k; ++i)
        terms.push_back({mu(i), aQ(i) * aQ(i), aQ(i) * cQ(i), cQ(i) * cQ(i)});

    DualSolution sol = solve_dual(terms, kappa, excess);
    GapResult r;
    r.value = anchor_risk + sol.value;
    r.lambda_star = sol.lambda_star;
    r.kappa = kappa;
    r.anchor_risk = anchor_risk;
    r.excess_budget = excess;
    r.hard_case = sol.hard_case;
    r.path = GapPath::dense;
    return r;
}

// Exact spectral reduction for the two-valued covariance diag(I, beta I).
// On ker(X) the covariance acts as beta I + (1 - beta) P E_S E_S^T P, so its
// restricted spectrum is {beta + (1 - beta) nu_j} for the nonzero eigenvalues
// nu_j of K = I - X_S^T (X X^T)^{-1} X_S, plus beta with bulk multiplicity.
// Eigenvectors are P s_j / sqrt(nu_j) with s_j the embedded K-eigenvectors,
// so all dual components come from d_S-dimensional quantities.
GapResult gap_two_valued(const SampleSet& S, const PopulationModel& model, const dvec& anchor,
                         double B) {
    const index_t n = S.n();
    const index_t p = S.p();
    const index_t ds = model.d_S;
    const double beta = model.junk_scale;

    dmat G = S.gram();
    Eigen::LLT<dmat> llt(G);
    if (llt.info() != Eigen::Success)
        throw rank_error("Gram matrix is not positive definite; design is rank deficient");

    dvec diff = anchor - model.w_star;
    double anchor_risk = model.sigma2 + diff.dot(model.sigma_diag.cwiseProduct(diff));
    double excess = std::max(0.0, B * B - anchor.squaredNorm());

    auto project = [&](const dvec& v) -> dvec {
        return v - S.apply_XT(llt.solve(S.apply_X(v)));
    };
    dvec pa = project(anchor);
    dvec pz = project((-(model.sigma_diag.cwiseProduct(diff))).eval());

    std::vector<DualTerm> terms;
    double kappa = beta;
    double a2_disc = 0.0, c2_disc = 0.0, ac_disc = 0.0;
    index_t kept = 0;
    if (ds > 0) {
        dmat Kmat = dmat::Identity(ds, ds) - S.X_S.transpose() * llt.solve(S.X_S);
        Eigen::SelfAdjointEigenSolver<dmat> es(Kmat);
        if (es.info() != Eigen::Success)
            throw numerical_error("eigendecomposition of the signal-block kernel matrix failed");
        for (index_t j = 0; j < ds; ++j) {
            double nu = es.eigenvalues()(j);
            if (nu <= 1e-12) continue;
            nu = std::min(nu, 1.0);
            double mu = beta + (1.0 - beta) * nu;
            double aj = pa.head(ds).dot(es.eigenvectors().col(j)) / std::sqrt(nu);
            double cj = pz.head(ds).dot(es.eigenvectors().col(j)) / std::sqrt(nu);
            terms.push_back({mu, aj * aj, aj * cj, cj * cj});
            kappa = std::max(kappa, mu);
            a2_disc += aj * aj;
            c2_disc += cj * cj;
            ac_disc += aj * cj;
            ++kept;
        }
    }
    index_t bulk_mult = (p - n) - kept;
    if (bulk_mult > 0) {
        double a2_b = std::max(0.0, pa.squaredNorm() - a2_disc);
        double c2_b = std::max(0.0, pz.squaredNorm() - c2_disc);
        double ac_b = pa.dot(pz) - ac_disc;
        terms.push_back({beta, a2_b, ac_b, c2_b});
    }

    double kernel_norm2 = 0.0;
    for (const auto& t : terms) kernel_norm2 += t.a2;
    if (is_degenerate(excess, B, kernel_norm2, anchor.norm()))
        return finish_degenerate(anchor_risk, kappa, GapPath::two_valued);

    DualSolution sol = solve_dual(terms, kappa, excess);
    GapResult r;
    r.value = anchor_risk + sol.value;
    r.lambda_star = sol.lambda_star;
    r.kappa = kappa;
    r.anchor_risk = anchor_risk;
    r.excess_budget = excess;
    r.hard_case = sol.hard_case;
    r.path = GapPath::two_valued;
    return r;
}

struct CgOut {
    dvec y;
    bool converged = false;
    int iters = 0;
};

// Conjugate gradients for (lambda I - P Sigma P) y = rhs with rhs in ker(X);
// the Krylov space stays inside the kernel, where the operator is positive
// definite for lambda above the restricted top eigenvalue.
CgOut cg_kernel(const KernelView& K, const dvec& sigma_diag, double lambda, const dvec& rhs,
                double tol, int max_iter) {
    CgOut out;
    const double rhs_norm = rhs.norm();
    out.y = dvec::Zero(rhs.size());
    if (rhs_norm == 0.0) {
        out.converged = true;
        return out;
    }
    dvec r = rhs;
    dvec pv = r;
    double rs = r.squaredNorm();
    for (int it = 0; it < max_iter; ++it) {
        dvec Ap = lambda * pv - K.project(sigma_diag.cwiseProduct(pv));
        double pAp = pv.dot(Ap);
        if (pAp <= 0.0) break;  // lost definiteness: lambda too close to the pole
        double alpha = rs / pAp;
        out.y += alpha * pv;
        r -= alpha * Ap;
        double rs_new = r.squaredNorm();
        out.iters = it + 1;
        if (std::sqrt(rs_new) <= tol * rhs_norm) {
            out.converged = true;
            break;
        }
        pv = r + (rs_new / rs) * pv;
        rs = rs_new;
    }
    return out;
}

GapResult gap_cg(const SampleSet& S, const PopulationModel& model, const dvec& anchor, double B) {
    const index_t p = S.p();
    KernelView K = kernel_basis(S, KernelView::Mode::matrix_free, 0);

    dvec diff = anchor - model.w_star;
    double anchor_risk = model.sigma2 + diff.dot(model.sigma_diag.cwiseProduct(diff));
    double excess = std::max(0.0, B * B - anchor.squaredNorm());

    dvec pa = K.project(anchor);
    dvec pz = K.project((-(model.sigma_diag.cwiseProduct(diff))).eval());
    double kappa = restricted_eigenvalue(K, model.sigma_diag);

    if (is_degenerate(excess, B, pa.squaredNorm(), anchor.norm()))
        return finish_degenerate(anchor_risk, kappa, GapPath::conjugate_gradient);

    const double cg_tol = 1e-12;
    // exact-arithmetic termination is at the kernel dimension; finite
    // precision re-explores lost directions, so give it generous headroom
    const int cg_iters = static_cast<int>(std::min<index_t>(8 * p + 100, 20000));

    // phi'(lambda) = 2 <a, y> - ||y||^2 + excess with y = (lambda I - M)^{-1} (lambda a + c).
    // An unconverged solve means lambda sits too close to the pole; treat the
    // derivative as negative so the bracket keeps expanding.
    auto dphi = [&](double lambda) -> std::pair<double, bool> {
        dvec rhs = lambda * pa + pz;
        CgOut cg = cg_kernel(K, model.sigma_diag, lambda, rhs, cg_tol, cg_iters);
        if (!cg.converged) return {-1.0, false};
        return {2.0 * pa.dot(cg.y) - cg.y.squaredNorm() + excess, true};
    };
    auto phi = [&](double lambda) -> double {
        dvec rhs = lambda * pa + pz;
        CgOut cg = cg_kernel(K, model.sigma_diag, lambda, rhs, cg_tol, cg_iters);
        if (!cg.converged) return std::numeric_limits<double>::infinity();
        return rhs.dot(cg.y) + lambda * excess;
    };

    double delta = 1e-6 * (1.0 + kappa);
    auto first = dphi(kappa + delta);
    bool hard = false;
    double lo, hi;
    if (first.second && first.first >= 0.0) {
        // Minimizer is at or below the first probe; shrink toward the pole.
        double d_hi = delta;
        while (delta > 1e-9 * (1.0 + kappa)) {
            auto probe = dphi(kappa + 0.5 * delta);
            if (!(probe.second && probe.first >= 0.0)) break;
            delta *= 0.5;
            d_hi = delta;
        }
        if (delta <= 1e-9 * (1.0 + kappa)) hard = true;
        lo = kappa + 0.5 * delta;
        hi = kappa + d_hi;
    } else {
        while (true) {
            delta *= 2.0;
            if (delta > kBracketCap * (1.0 + kappa))
                throw numerical_error(
                    "dual bracket expansion exceeded its cap; objective appears unbounded");
            auto probe = dphi(kappa + delta);
            if (probe.second && probe.first >= 0.0) break;
        }
        lo = kappa + 0.25 * delta;
        hi = kappa + delta;
    }
    auto sol = golden_minimize(phi, lo, hi);

    GapResult r;
    r.value = anchor_risk + sol.second;
    r.lambda_star = sol.first;
    r.kappa = kappa;
    r.anchor_risk = anchor_risk;
    r.excess_budget = excess;
    r.hard_case = hard;
    r.path = GapPath::conjugate_gradient;
    return r;
}

}  // namespace

const dmat& KernelView::basis() const {
    if (mode_ != Mode::dense)
        throw usage_error("kernel basis is not materialized in matrix-free mode");
    return F_;
}

dvec KernelView::project(const dvec& v) const {
    if (v.size() != p_) throw dimension_error("projector input has wrong length");
    if (mode_ == Mode::dense) return F_ * (F_.transpose() * v);
    return v - S_->apply_XT(gram_llt_.solve(S_->apply_X(v)));
}

KernelView kernel_basis(const SampleSet& S, KernelView::Mode mode, index_t dense_ceiling) {
    (void)dense_ceiling;
    KernelView K;
    K.mode_ = mode;
    K.n_ = S.n();
    K.p_ = S.p();
    if (S.p() < S.n()) throw dimension_error("kernel basis requires p >= n");
    if (mode == KernelView::Mode::dense) {
        if (S.n() == 0) {
            K.F_ = dmat::Identity(S.p(), S.p());
            return K;
        }
        Eigen::BDCSVD<dmat> svd(S.X(), Eigen::ComputeFullV);
        const dvec& sv = svd.singularValues();
        if (sv(S.n() - 1) <= 1e-10 * sv(0))
            throw rank_error("design is numerically rank deficient; kernel dimension ambiguous");
        K.F_ = svd.matrixV().rightCols(S.p() - S.n());
    } else {
        K.S_ = &S;
        dmat G = S.gram();
        K.gram_llt_.compute(G);
        if (K.gram_llt_.info() != Eigen::Success)
            throw rank_error("Gram matrix is not positive definite; design is rank deficient");
    }
    return K;
}

double restricted_eigenvalue(const KernelView& K, const dvec& sigma_diag) {
    if (sigma_diag.size() != K.p())
        throw dimension_error("covariance diagonal has wrong length");
    if (K.kernel_dim() == 0) return 0.0;
    if (K.mode() == KernelView::Mode::dense) {
        dmat M = K.basis().transpose() * sigma_diag.asDiagonal() * K.basis();
        Eigen::SelfAdjointEigenSolver<dmat> es(M, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(K.kernel_dim() - 1);
    }
    auto op = [&](const dvec& v) -> dvec {
        return K.project(sigma_diag.cwiseProduct(K.project(v)).eval());
    };
    return power_iteration(op, K.p(), 0.0).eigenvalue;
}

double kappa_limit_formula(const dmat& X_S, double lambda) {
    if (X_S.cols() == 0)
        throw domain_error("kappa limit is undefined for an empty signal block");
    if (lambda <= 0.0) throw domain_error("kappa limit requires lambda > 0");
    dmat A = dmat::Zero(X_S.cols(), X_S.cols());
    A.selfadjointView<Eigen::Lower>().rankUpdate(X_S.transpose());
    Eigen::SelfAdjointEigenSolver<dmat> es(A, Eigen::EigenvaluesOnly);
    double s_min = std::max(0.0, es.eigenvalues()(0));
    return lambda / (s_min + lambda);
}

GapResult worst_case_gap(const SampleSet& S, const PopulationModel& model, const dvec& anchor,
                         double B, GapMode mode) {
    if (model.sigma_diag.size() != S.p())
        throw dimension_error("model dimension does not match the sample set");
    check_anchor(S, anchor, B);
    if (S.p() == S.n()) {
        dvec diff = anchor - model.w_star;
        double risk = model.sigma2 + diff.dot(model.sigma_diag.cwiseProduct(diff));
        return finish_degenerate(risk, 0.0, GapPath::short_circuit);
    }
    switch (mode) {
        case GapMode::dense:
            return gap_dense(S, model, anchor, B);
        case GapMode::matrix_free:
            if (model.two_valued) return gap_two_valued(S, model, anchor, B);
            return gap_cg(S, model, anchor, B);
        case GapMode::auto_select:
        default:
            if (model.two_valued) return gap_two_valued(S, model, anchor, B);
            if (S.p() <= CovarianceView::kDefaultDenseCeiling)
                return gap_dense(S, model, anchor, B);
            return gap_cg(S, model, anchor, B);
    }
}

double brute_force_gap_oracle(const SampleSet& S, const PopulationModel& model, const dvec& anchor,
                              double B, int grid) {
    check_anchor(S, anchor, B);
    KernelView K = kernel_basis(S, KernelView::Mode::dense, S.p());
    const index_t k = K.kernel_dim();
    if (k < 1 || k > 2)
        throw usage_error("brute-force oracle supports kernel dimension 1 or 2 only");
    const dmat& F = K.basis();

    dvec base = anchor - model.w_star;
    dmat M = F.transpose() * model.sigma_diag.asDiagonal() * F;
    dvec b = F.transpose() * (model.sigma_diag.cwiseProduct(base)).eval();
    double g0 = model.sigma2 + base.dot(model.sigma_diag.cwiseProduct(base));
    auto g = [&](const dvec& t) { return g0 + 2.0 * b.dot(t) + t.dot(M * t); };

    dvec aF = F.transpose() * anchor;
    double excess = B * B - anchor.squaredNorm();
    double r2 = excess + aF.squaredNorm();
    if (r2 < -1e-10 * (1.0 + B * B))
        throw precondition_error("anchor norm exceeds the budget");
    double r = std::sqrt(std::max(0.0, r2));
    dvec center = -aF;

    double best = -std::numeric_limits<double>::infinity();
    if (k == 1) {
        dvec t(1);
        t(0) = center(0) + r;
        best = std::max(best, g(t));
        t(0) = center(0) - r;
        best = std::max(best, g(t));
        if (M(0, 0) > 0.0) {
            t(0) = -b(0) / M(0, 0);
            if (std::abs(t(0) - center(0)) <= r) best = std::max(best, g(t));
        }
        return best;
    }

    auto g_theta = [&](double th) {
        dvec t(2);
        t(0) = center(0) + r * std::cos(th);
        t(1) = center(1) + r * std::sin(th);
        return g(t);
    };
    const double two_pi = 2.0 * std::acos(-1.0);
    double best_th = 0.0;
    for (int i = 0; i < grid; ++i) {
        double th = two_pi * i / grid;
        double v = g_theta(th);
        if (v > best) {
            best = v;
            best_th = th;
        }
    }
    // Local refinement around the best grid angle.
    double step = two_pi / grid;
    auto sol = golden_minimize([&](double th) { return -g_theta(th); }, best_th - step,
                               best_th + step);
    best = std::max(best, -sol.second);

    // Interior stationary point, only relevant if the quadratic is concave in
    // some direction (it is not for a positive diagonal, kept for safety).
    Eigen::LLT<dmat> llt(M);
    if (llt.info() == Eigen::Success) {
        dvec ts = llt.solve(-b);
        if ((ts - center).norm() <= r) best = std::max(best, g(ts));
    }
    return best;
}

MrDecomposition gap_decomposition_mr(const SampleSet& S, const PopulationModel& model,
                                     GapMode mode) {
    Predictor mr = min_risk(S, model);
    Predictor mn = min_norm(S);
    double B = mr.w.norm();

    MrDecomposition out;
    out.gap = worst_case_gap(S, model, mr.w, B, mode);
    out.mr_norm2 = B * B;
    out.mn_norm2 = mn.w.squaredNorm();

    dvec t = model.sigma_diag.cwiseProduct(mr.w - model.w_star);
    dmat G = S.gram();
    Eigen::LLT<dmat> llt(G);
    if (llt.info() != Eigen::Success)
        throw rank_error("Gram matrix is not positive definite; design is rank deficient");
    out.orthogonality_residual = (t - S.apply_XT(llt.solve(S.apply_X(t)))).norm();

    double den = out.gap.kappa * (out.mr_norm2 - out.mn_norm2);
    if (den < 1e-14) {
        out.degenerate = true;
    } else {
        out.gamma_n = (out.gap.value - out.gap.anchor_risk) / den;
    }
    return out;
}

BallDecomposition gap_decomposition_ball(const SampleSet& S, const PopulationModel& model,
                                         double B, GapMode mode) {
    Predictor mn = min_norm(S);
    double mn_norm = mn.w.norm();
    if (B < mn_norm * (1.0 - 1e-12))
        throw precondition_error("budget is below the min-norm radius; feasible set empty");

    BallDecomposition out;
    out.gap = worst_case_gap(S, model, mn.w, B, mode);
    out.anchor_ld = out.gap.anchor_risk;
    double excess = out.gap.excess_budget;
    out.remainder = out.gap.value - out.anchor_ld - out.gap.kappa * excess;
    out.remainder_bound =
        2.0 * std::sqrt(std::max(0.0, out.anchor_ld - model.sigma2) * out.gap.kappa * excess);

    dmat G = S.gram();
    Eigen::LLT<dmat> llt(G);
    if (llt.info() != Eigen::Success)
        throw rank_error("Gram matrix is not positive definite; design is rank deficient");
    out.kernel_residual = (mn.w - S.apply_XT(llt.solve(S.apply_X(mn.w)))).norm();
    return out;
}

BallGapBound ball_gap_lower_bound(const SampleSet& S, const PopulationModel& model,
                                  DeviationMode mode) {
    Predictor mn = min_norm(S);
    CovDeviation dev = cov_deviation_norms(S, model, mode);
    const double n = static_cast<double>(S.n());
    double r = mn.w.norm() - model.w_star.norm();
    double noise_gap = model.sigma2 - S.E.squaredNorm() / n;

    BallGapBound out;
    out.one_sided = dev.rho * r * r + noise_gap;
    out.two_sided = dev.opnorm * r * r - std::abs(noise_gap);
    if (r >= 0.0 && dev.v_top.size() == S.p() && dev.v_top.norm() > 0.0) {
        dvec w_plus = model.w_star + r * dev.v_top;
        dvec w_minus = model.w_star - r * dev.v_top;
        double gp = population_risk(w_plus, model) - empirical_risk(w_plus, S);
        double gm = population_risk(w_minus, model) - empirical_risk(w_minus, S);
        if (gp >= gm) {
            out.witness_gap = gp;
            out.witness = w_plus;
        } else {
            out.witness_gap = gm;
            out.witness = w_minus;
        }
        out.witness_valid = true;
    }
    return out;
}

ClassicalBounds classical_bounds(double B, index_t n, double trace_cov, double kappa) {
    if (n <= 0) throw domain_error("classical bounds require n >= 1");
    ClassicalBounds out;
    out.star_trace = B * B * trace_cov / static_cast<double>(n);
    out.rademacher = std::sqrt(out.star_trace);
    out.star_kappa = kappa * B * B;
    return out;
}

}  // namespace interplab
