#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include "interplab/errors.hpp"
#include "interplab/interpolators.hpp"
#include "interplab/model.hpp"

using namespace interplab;

namespace {

ProblemSpec small_spec() {
    ProblemSpec sp;
    sp.d_S = 2;
    sp.d_J = 9;
    sp.lambda = 2.0;
    sp.sigma2 = 1.0;
    sp.w_star_S = dvec(2);
    sp.w_star_S << 0.5, 1.5;
    return sp;
}

}  // namespace

TEST_CASE("min-norm interpolator matches the pseudoinverse") {
    ProblemSpec sp = small_spec();
    SampleSet S = sample_dataset(sp, 6, 101);
    Predictor mn = min_norm(S);
    CHECK(mn.kind == PredictorKind::min_norm);
    CHECK(mn.w.size() == S.p());

    CHECK((S.apply_X(mn.w) - S.Y).norm() < 1e-10 * (1.0 + S.Y.norm()));

    dmat X = S.X();
    Eigen::BDCSVD<dmat> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    dvec pinv = svd.solve(S.Y);
    CHECK((mn.w - pinv).norm() < 1e-10 * (1.0 + pinv.norm()));

    // minimality: no component along the design kernel
    Eigen::BDCSVD<dmat> full(X, Eigen::ComputeFullV);
    dvec kernel_dir = full.matrixV().col(S.p() - 1);
    CHECK(std::abs(mn.w.dot(kernel_dir)) < 1e-10);
}

TEST_CASE("min-norm rejects a singular gram matrix") {
    ProblemSpec sp = small_spec();
    SampleSet S = sample_dataset(sp, 4, 103);
    dmat X_S = S.X_S, X_J = S.X_J;
    dvec Y = S.Y, E = S.E;
    X_S.row(3) = X_S.row(2);
    X_J.row(3) = X_J.row(2);
    Y(3) = Y(2);
    E(3) = E(2);
    SampleSet dup = SampleSet::from_parts(X_S, X_J, Y, E);
    CHECK_THROWS_AS(min_norm(dup), rank_error);
}

TEST_CASE("signal ridge agrees with the primal normal equations") {
    ProblemSpec sp = small_spec();
    sp.d_S = 3;
    sp.w_star_S = dvec::Ones(3);
    SampleSet S = sample_dataset(sp, 8, 107);
    const double lam = 1.7;
    Predictor r = ridge_signal(S, lam);
    CHECK(r.kind == PredictorKind::ridge_signal);

    dmat A = S.X_S.transpose() * S.X_S + lam * dmat::Identity(3, 3);
    dvec primal = A.ldlt().solve(S.X_S.transpose() * S.Y);
    CHECK((r.signal_part(S) - primal).norm() < 1e-10 * (1.0 + primal.norm()));
    CHECK(r.junk_part(S).norm() == 0.0);
}

TEST_CASE("risk-minimal interpolator") {
    ProblemSpec sp = small_spec();
    SampleSet S = sample_dataset(sp, 6, 109);
    PopulationModel model = PopulationModel::from_spec(sp);
    Predictor mr = min_risk(S, model);
    Predictor mn = min_norm(S);
    CHECK(mr.kind == PredictorKind::min_risk);

    CHECK((S.apply_X(mr.w) - S.Y).norm() < 1e-9 * (1.0 + S.Y.norm()));
    CHECK(population_risk(mr.w, model) <= population_risk(mn.w, model) + 1e-12);

    // closed form: w_star + Sigma^{-1} X^T (X Sigma^{-1} X^T)^{-1} E
    dmat X = S.X();
    dmat Sinv = model.sigma_diag.cwiseInverse().asDiagonal();
    dmat K = X * Sinv * X.transpose();
    dvec oracle = model.w_star + Sinv * X.transpose() * K.ldlt().solve(S.E);
    CHECK((mr.w - oracle).norm() < 1e-9 * (1.0 + oracle.norm()));

    Predictor mr2 = min_risk(S, sp);
    CHECK((mr2.w - mr.w).norm() == 0.0);
}

TEST_CASE("junk flip negates exactly one block and is an involution") {
    ProblemSpec sp = small_spec();
    SampleSet S = sample_dataset(sp, 5, 113);
    SampleSet F = flip_junk(S);
    CHECK((F.X_J + S.X_J).norm() == 0.0);
    CHECK((F.X_S - S.X_S).norm() == 0.0);
    CHECK((F.Y - S.Y).norm() == 0.0);
    CHECK((F.E - S.E).norm() == 0.0);
    SampleSet FF = flip_junk(F);
    CHECK((FF.X_J - S.X_J).norm() == 0.0);
}

TEST_CASE("spd condition estimate on a known spectrum") {
    dmat A = dmat::Zero(3, 3);
    A.diagonal() << 100.0, 4.0, 1.0;
    Eigen::LLT<dmat> llt(A);
    double c = spd_condition_estimate(A, llt);
    CHECK(c == doctest::Approx(100.0).epsilon(1e-6));
}
