#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "interplab/errors.hpp"
#include "interplab/gap.hpp"
#include "interplab/interpolators.hpp"
#include "interplab/model.hpp"

using namespace interplab;

namespace {

ProblemSpec junk_spec(index_t d_S, index_t d_J, double lambda, double sigma2 = 1.0) {
    ProblemSpec sp;
    sp.d_S = d_S;
    sp.d_J = d_J;
    sp.lambda = lambda;
    sp.sigma2 = sigma2;
    sp.w_star_S = dvec::Constant(d_S, 0.7);
    return sp;
}

// kernel dimension is exactly `excess`, so the enumeration oracle applies
ProblemSpec tiny_spec(RngStream& s, index_t& n_out) {
    ProblemSpec sp;
    sp.d_S = static_cast<index_t>(s.next_u64() % 3);
    n_out = sp.d_S + 1 + static_cast<index_t>(s.next_u64() % 3);
    index_t excess = 1 + static_cast<index_t>(s.next_u64() % 2);
    sp.d_J = n_out - sp.d_S + excess;
    sp.lambda = 0.5 + 2.5 * s.uniform();
    sp.sigma2 = 0.5 + s.uniform();
    sp.w_star_S = dvec(sp.d_S);
    for (index_t i = 0; i < sp.d_S; ++i) sp.w_star_S(i) = s.normal();
    return sp;
}

}  // namespace

TEST_CASE("kernel basis is orthonormal and annihilated by the design") {
    ProblemSpec sp = junk_spec(2, 7, 2.0);
    SampleSet S = sample_dataset(sp, 5, 301);
    KernelView K = kernel_basis(S, KernelView::Mode::dense);
    CHECK(K.kernel_dim() == 4);

    const dmat& F = K.basis();
    CHECK((F.transpose() * F - dmat::Identity(4, 4)).norm() < 1e-12);
    CHECK((S.X() * F).norm() < 1e-10);

    KernelView Kmf = kernel_basis(S, KernelView::Mode::matrix_free);
    CHECK_THROWS_AS(Kmf.basis(), usage_error);

    RngStream s(55);
    dvec v(S.p());
    for (index_t i = 0; i < S.p(); ++i) v(i) = s.normal();
    dvec pd = K.project(v);
    dvec pm = Kmf.project(v);
    CHECK((pd - pm).norm() < 1e-10 * (1.0 + v.norm()));
    CHECK((pd - F * (F.transpose() * v)).norm() < 1e-10);
    // projector properties
    CHECK((K.project(pd) - pd).norm() < 1e-10);
    CHECK(S.apply_X(pd).norm() < 1e-9);
}

TEST_CASE("kernel basis edge cases") {
    ProblemSpec sp = junk_spec(1, 0, 1.0);
    SampleSet tall = sample_dataset(sp, 3, 302);  // p = 1 < n
    CHECK_THROWS_AS(kernel_basis(tall, KernelView::Mode::dense), dimension_error);

    SampleSet empty = SampleSet::from_parts(dmat(0, 2), dmat(0, 3), dvec(0), dvec(0));
    KernelView K = kernel_basis(empty, KernelView::Mode::dense);
    CHECK(K.kernel_dim() == 5);
    CHECK((K.basis() - dmat::Identity(5, 5)).norm() == 0.0);

    ProblemSpec sq = junk_spec(2, 4, 2.0);
    SampleSet S = sample_dataset(sq, 4, 303);
    dmat X_S = S.X_S, X_J = S.X_J;
    dvec Y = S.Y, E = S.E;
    X_S.row(1) = X_S.row(0);
    X_J.row(1) = X_J.row(0);
    Y(1) = Y(0);
    E(1) = E(0);
    SampleSet dup = SampleSet::from_parts(X_S, X_J, Y, E);
    CHECK_THROWS_AS(kernel_basis(dup, KernelView::Mode::dense), rank_error);
}

TEST_CASE("restricted eigenvalue: dense, matrix-free and oracle agree") {
    ProblemSpec sp = junk_spec(2, 7, 3.0);
    SampleSet S = sample_dataset(sp, 5, 307);
    PopulationModel model = PopulationModel::from_spec(sp);

    KernelView Kd = kernel_basis(S, KernelView::Mode::dense);
    KernelView Km = kernel_basis(S, KernelView::Mode::matrix_free);
    double kd = restricted_eigenvalue(Kd, model.sigma_diag);
    double km = restricted_eigenvalue(Km, model.sigma_diag);

    const dmat& F = Kd.basis();
    dmat M = F.transpose() * model.sigma_diag.asDiagonal() * F;
    Eigen::SelfAdjointEigenSolver<dmat> es(M);
    double oracle = es.eigenvalues()(Kd.kernel_dim() - 1);

    CHECK(kd == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(km == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("kappa limit formula") {
    dmat X_S(2, 1);
    X_S << 2.0, 0.0;  // X_S^T X_S = 4
    CHECK(kappa_limit_formula(X_S, 3.0) == doctest::Approx(3.0 / 7.0).epsilon(1e-14));
    CHECK_THROWS_AS(kappa_limit_formula(dmat(2, 0), 1.0), domain_error);
    CHECK_THROWS_AS(kappa_limit_formula(X_S, 0.0), domain_error);
}

TEST_CASE("dual solver matches direct enumeration on tiny instances") {
    RngStream s(2101);
    double worst = 0.0;
    for (int rep = 0; rep < 150; ++rep) {
        index_t n = 0;
        ProblemSpec sp = tiny_spec(s, n);
        SampleSet S = sample_dataset(sp, n, s);
        PopulationModel model = PopulationModel::from_spec(sp);
        Predictor mn = min_norm(S);
        double B = mn.w.norm() * (1.0 + 1.5 * s.uniform());
        GapResult g = worst_case_gap(S, model, mn.w, B, GapMode::dense);
        double oracle = brute_force_gap_oracle(S, model, mn.w, B);
        worst = std::max(worst, std::abs(g.value - oracle) / std::abs(oracle));
        CHECK(g.value >= g.anchor_risk - 1e-12 * (1.0 + g.anchor_risk));
        CHECK(g.lambda_star >= g.kappa);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("budget at the min-norm radius collapses to the anchor risk") {
    ProblemSpec sp = junk_spec(1, 12, 2.0);
    SampleSet S = sample_dataset(sp, 6, 311);
    PopulationModel model = PopulationModel::from_spec(sp);
    Predictor mn = min_norm(S);
    GapResult g = worst_case_gap(S, model, mn.w, mn.w.norm(), GapMode::dense);
    CHECK(g.degenerate);
    CHECK(g.value == population_risk(mn.w, model));
    CHECK(g.excess_budget == 0.0);
    CHECK(std::isinf(g.lambda_star));
}

TEST_CASE("structured two-valued path matches the dense path") {
    ProblemSpec sp = junk_spec(2, 25, 4.0, 0.8);
    SampleSet S = sample_dataset(sp, 10, 313);
    PopulationModel model = PopulationModel::from_spec(sp);
    Predictor mn = min_norm(S);
    double B = 1.4 * mn.w.norm();

    GapResult a = worst_case_gap(S, model, mn.w, B, GapMode::auto_select);
    GapResult d = worst_case_gap(S, model, mn.w, B, GapMode::dense);
    CHECK(a.path == GapPath::two_valued);
    CHECK(d.path == GapPath::dense);
    CHECK(a.value == doctest::Approx(d.value).epsilon(1e-8));
    CHECK(a.kappa == doctest::Approx(d.kappa).epsilon(1e-10));
    CHECK(a.lambda_star == doctest::Approx(d.lambda_star).epsilon(1e-6));
    CHECK(a.anchor_risk == doctest::Approx(d.anchor_risk).epsilon(1e-12));
}

TEST_CASE("iterative path matches the dense path on a general covariance") {
    ProblemSpec sp = junk_spec(2, 28, 3.0);
    SampleSet S = sample_dataset(sp, 8, 317);
    RngStream s(318);
    dvec diag(S.p()), wstar(S.p());
    for (index_t i = 0; i < S.p(); ++i) {
        diag(i) = 0.5 + 1.5 * s.uniform();
        wstar(i) = 0.3 * s.normal();
    }
    PopulationModel model = PopulationModel::general(diag, wstar, 0.9);
    Predictor mn = min_norm(S);
    double B = 1.3 * mn.w.norm();

    GapResult cg = worst_case_gap(S, model, mn.w, B, GapMode::matrix_free);
    GapResult d = worst_case_gap(S, model, mn.w, B, GapMode::dense);
    CHECK(cg.path == GapPath::conjugate_gradient);
    CHECK(cg.value == doctest::Approx(d.value).epsilon(1e-6));
    CHECK(cg.kappa == doctest::Approx(d.kappa).epsilon(1e-7));
}

TEST_CASE("hard case: anchor in the row space of the design") {
    // w_star = X^T c makes both dual coefficient vectors vanish on ker(X),
    // so the optimum sits at lambda = kappa with the budget spent on the top
    // restricted eigendirection: value = sigma2 + kappa (B^2 - ||w_star||^2).
    ProblemSpec sp = junk_spec(2, 3, 2.0);
    SampleSet raw = sample_dataset(sp, 3, 331);  // p = 5, kernel dim 2
    RngStream s(332);
    dvec c(3);
    for (int i = 0; i < 3; ++i) c(i) = s.normal();
    dvec wstar = raw.apply_XT(c);
    dvec Y = raw.apply_X(wstar);
    SampleSet S = SampleSet::from_parts(raw.X_S, raw.X_J, Y, dvec::Zero(3));

    dvec diag(5);
    diag << 0.6, 1.8, 1.1, 0.9, 1.4;
    PopulationModel model = PopulationModel::general(diag, wstar, 0.7);

    double B = 2.0 * wstar.norm();
    GapResult g = worst_case_gap(S, model, wstar, B, GapMode::dense);
    KernelView K = kernel_basis(S, KernelView::Mode::dense);
    double kappa = restricted_eigenvalue(K, diag);
    double expected = 0.7 + kappa * (B * B - wstar.squaredNorm());

    CHECK(g.hard_case);
    CHECK(g.kappa == doctest::Approx(kappa).epsilon(1e-12));
    CHECK(g.lambda_star == doctest::Approx(kappa).epsilon(1e-9));
    CHECK(g.value == doctest::Approx(expected).epsilon(1e-9));

    double oracle = brute_force_gap_oracle(S, model, wstar, B);
    CHECK(g.value == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("square design short-circuits to the unique interpolator") {
    ProblemSpec sp = junk_spec(1, 2, 1.5);
    SampleSet S = sample_dataset(sp, 3, 337);  // p = n = 3
    PopulationModel model = PopulationModel::from_spec(sp);
    Predictor mn = min_norm(S);
    GapResult g = worst_case_gap(S, model, mn.w, 10.0 * mn.w.norm());
    CHECK(g.path == GapPath::short_circuit);
    CHECK(g.degenerate);
    CHECK(g.value == doctest::Approx(population_risk(mn.w, model)).epsilon(1e-12));
}

TEST_CASE("anchor preconditions are enforced") {
    ProblemSpec sp = junk_spec(1, 8, 2.0);
    SampleSet S = sample_dataset(sp, 4, 341);
    PopulationModel model = PopulationModel::from_spec(sp);
    Predictor mn = min_norm(S);

    CHECK_THROWS_AS(worst_case_gap(S, model, 2.0 * mn.w, 10.0, GapMode::dense),
                    precondition_error);
    CHECK_THROWS_AS(worst_case_gap(S, model, mn.w, 0.9 * mn.w.norm(), GapMode::dense),
                    precondition_error);
    CHECK_THROWS_AS(worst_case_gap(S, model, mn.w.head(3), 10.0, GapMode::dense),
                    dimension_error);

    PopulationModel wrong = PopulationModel::general(dvec::Ones(4), dvec::Zero(4), 1.0);
    CHECK_THROWS_AS(worst_case_gap(S, wrong, mn.w, 10.0, GapMode::dense), dimension_error);
}

TEST_CASE("min-risk anchored decomposition: tightness ratio and orthogonality") {
    RngStream seeds(2203);
    for (int rep = 0; rep < 10; ++rep) {
        ProblemSpec sp = junk_spec(1, 30, 2.0 + seeds.uniform());
        SampleSet S = sample_dataset(sp, 10, seeds);
        PopulationModel model = PopulationModel::from_spec(sp);
        MrDecomposition d = gap_decomposition_mr(S, model, GapMode::dense);
        REQUIRE_FALSE(d.degenerate);
        CHECK(d.gamma_n >= 1.0 - 1e-9);
        CHECK(d.gamma_n <= 4.0 + 1e-9);
        CHECK(d.mr_norm2 >= d.mn_norm2 - 1e-12);
        CHECK(d.orthogonality_residual < 1e-8);
        Predictor mr = min_risk(S, model);
        CHECK(d.gap.value >= population_risk(mr.w, model) - 1e-10);
    }
}

TEST_CASE("ball decomposition: remainder bracket and preconditions") {
    ProblemSpec sp = junk_spec(1, 30, 3.0);
    SampleSet S = sample_dataset(sp, 10, 347);
    PopulationModel model = PopulationModel::from_spec(sp);
    Predictor mn = min_norm(S);
    double B = 1.5 * mn.w.norm();

    BallDecomposition b = gap_decomposition_ball(S, model, B, GapMode::dense);
    CHECK(b.anchor_ld == doctest::Approx(population_risk(mn.w, model)).epsilon(1e-12));
    double excess = B * B - mn.w.squaredNorm();
    CHECK(b.gap.value == doctest::Approx(b.anchor_ld + b.gap.kappa * excess + b.remainder)
                             .epsilon(1e-10));
    CHECK(std::abs(b.remainder) <= b.remainder_bound + 1e-9 * (1.0 + std::abs(b.gap.value)));
    CHECK(b.kernel_residual < 1e-8 * (1.0 + mn.w.norm()));

    CHECK_THROWS_AS(gap_decomposition_ball(S, model, 0.5 * mn.w.norm(), GapMode::dense),
                    precondition_error);
}

TEST_CASE("norm-ball lower bound produces a feasible certifying vector") {
    ProblemSpec sp = junk_spec(1, 24, 2.0, 0.8);
    sp.w_star_S(0) = 0.3;
    SampleSet S = sample_dataset(sp, 8, 353);
    PopulationModel model = PopulationModel::from_spec(sp);
    Predictor mn = min_norm(S);

    BallGapBound bound = ball_gap_lower_bound(S, model, DeviationMode::dense);
    REQUIRE(bound.witness_valid);
    CHECK(bound.witness.norm() <= mn.w.norm() * (1.0 + 1e-10));

    double direct = population_risk(bound.witness, model) - empirical_risk(bound.witness, S);
    CHECK(bound.witness_gap == doctest::Approx(direct).epsilon(1e-10));
    CHECK(bound.witness_gap >= bound.one_sided - 1e-9 * (1.0 + std::abs(bound.one_sided)));

    // recompute the closed forms
    CovDeviation dev = cov_deviation_norms(S, model, DeviationMode::dense);
    double r = mn.w.norm() - model.w_star.norm();
    double noise_gap = model.sigma2 - S.E.squaredNorm() / static_cast<double>(S.n());
    CHECK(bound.one_sided == doctest::Approx(dev.rho * r * r + noise_gap).epsilon(1e-12));
    CHECK(bound.two_sided ==
          doctest::Approx(dev.opnorm * r * r - std::abs(noise_gap)).epsilon(1e-12));

    BallGapBound lr = ball_gap_lower_bound(S, model, DeviationMode::lowrank);
    CHECK(lr.one_sided == doctest::Approx(bound.one_sided).epsilon(1e-9));
}

TEST_CASE("classical bound aggregates") {
    ClassicalBounds cb = classical_bounds(2.0, 4, 5.0, 0.3);
    CHECK(cb.star_trace == doctest::Approx(5.0));
    CHECK(cb.rademacher == doctest::Approx(std::sqrt(5.0)));
    CHECK(cb.star_kappa == doctest::Approx(1.2));
    CHECK_THROWS_AS(classical_bounds(2.0, 0, 5.0, 0.3), domain_error);
}
