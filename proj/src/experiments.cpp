#include "interplab/experiments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

#include "interplab/errors.hpp"
#include "interplab/gap.hpp"
#include "interplab/interpolators.hpp"

namespace interplab {

namespace {

int resolve_threads(int threads, index_t trials) {
    int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    return static_cast<int>(std::min<index_t>(t, trials));
}

double pairwise_sum(const double* x, index_t len) {
    if (len <= 16) {
        double s = 0.0;
        for (index_t i = 0; i < len; ++i) s += x[i];
        return s;
    }
    index_t h = len / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, len - h);
}

dmat gram_of(const dmat& A) {
    dmat G = dmat::Zero(A.rows(), A.rows());
    G.selfadjointView<Eigen::Lower>().rankUpdate(A);
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    return G;
}

}  // namespace

std::vector<McEstimate> run_monte_carlo_vec(const std::function<dvec(RngStream&)>& task,
                                            index_t width, index_t trials, uint64_t seed,
                                            int threads, uint64_t stream_offset) {
    if (trials < 2) throw usage_error("Monte Carlo needs at least 2 trials");
    if (width < 1) throw usage_error("Monte Carlo estimator width must be positive");

    std::vector<double> buf(static_cast<size_t>(width) * static_cast<size_t>(trials));
    std::atomic<index_t> next{0};
    std::mutex failure_mutex;
    std::vector<std::pair<index_t, std::string>> failures;

    auto worker = [&]() {
        for (;;) {
            index_t i = next.fetch_add(1);
            if (i >= trials) return;
            RngStream stream = RngStream::substream(seed, stream_offset + static_cast<uint64_t>(i));
            try {
                dvec v = task(stream);
                if (v.size() != width)
                    throw dimension_error("estimator returned " + std::to_string(v.size()) +
                                          " values, expected " + std::to_string(width));
                for (index_t c = 0; c < width; ++c)
                    buf[static_cast<size_t>(c) * trials + i] = v(c);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failures.emplace_back(i, e.what());
            }
        }
    };

    int nthreads = resolve_threads(threads, trials);
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        std::string indices;
        for (size_t i = 0; i < failures.size() && i < 8; ++i) {
            if (i) indices += ", ";
            indices += std::to_string(failures[i].first);
        }
        if (failures.size() > 8) indices += ", ...";
        throw numerical_error(std::to_string(failures.size()) + " of " + std::to_string(trials) +
                              " Monte Carlo trials failed (indices " + indices +
                              "); first error: " + failures.front().second);
    }

    std::vector<McEstimate> out(static_cast<size_t>(width));
    std::vector<double> dev(static_cast<size_t>(trials));
    for (index_t c = 0; c < width; ++c) {
        const double* col = buf.data() + static_cast<size_t>(c) * trials;
        double mean = pairwise_sum(col, trials) / static_cast<double>(trials);
        for (index_t i = 0; i < trials; ++i) {
            double d = col[i] - mean;
            dev[static_cast<size_t>(i)] = d * d;
        }
        double var = pairwise_sum(dev.data(), trials) / static_cast<double>(trials - 1);
        McEstimate& e = out[static_cast<size_t>(c)];
        e.mean = mean;
        e.std_error = std::sqrt(var / static_cast<double>(trials));
        e.trials = trials;
        e.seed = seed;
    }
    return out;
}

McEstimate run_monte_carlo(const std::function<double(RngStream&)>& task, index_t trials,
                           uint64_t seed, int threads, uint64_t stream_offset) {
    auto vec_task = [&task](RngStream& s) -> dvec {
        dvec v(1);
        v(0) = task(s);
        return v;
    };
    return run_monte_carlo_vec(vec_task, 1, trials, seed, threads, stream_offset)[0];
}

MrRiskResult mr_risk_check(index_t n, index_t p, double sigma2, index_t trials, uint64_t seed,
                           int threads) {
    if (n < 1) throw domain_error("mr_risk_check requires n >= 1");
    if (p <= n + 1)
        throw domain_error("risk formula requires p > n + 1; the expectation is infinite at p = " +
                           std::to_string(p));
    if (sigma2 < 0.0) throw domain_error("sigma2 must be nonnegative");

    // Isotropic covariance via a pure-junk spec with unit junk scale.  The
    // minimal-risk interpolator has risk sigma2 + E^T (X X^T)^{-1} E there.
    ProblemSpec sp;
    sp.d_S = 0;
    sp.d_J = p;
    sp.lambda = static_cast<double>(p);
    sp.sigma2 = sigma2;

    auto task = [&](RngStream& stream) -> double {
        SampleSet S = sample_dataset(sp, n, stream);
        Eigen::LLT<dmat> llt(S.gram());
        if (llt.info() != Eigen::Success)
            throw rank_error("Gram matrix is not positive definite");
        return sigma2 + S.E.dot(llt.solve(S.E));
    };

    MrRiskResult out;
    out.estimate = run_monte_carlo(task, trials, seed, threads);
    out.formula = sigma2 * static_cast<double>(p - 1) / static_cast<double>(p - 1 - n);
    return out;
}

NormCheckResult norm_limit_check(const ProblemSpec& spec, index_t n,
                                 const std::vector<index_t>& d_j_grid, index_t trials,
                                 uint64_t seed, int threads) {
    spec.validate();
    if (n < 1) throw domain_error("norm_limit_check requires n >= 1");
    if (d_j_grid.empty()) throw usage_error("d_J grid must not be empty");

    const index_t ds = spec.d_S;
    const double lambda = spec.lambda;
    const double sigma2 = spec.sigma2;
    const double w2 = spec.w_star_S.squaredNorm();
    const double nd = static_cast<double>(n);

    NormCheckResult out;
    double beta_n = 0.0;
    if (ds > 0) {
        // beta_n = E tr((X_S^T X_S/n + (lambda/n) I)^{-1}) / d_S, estimated on
        // substreams disjoint from the per-d_J norm trials.
        auto beta_task = [&](RngStream& stream) -> double {
            dmat X_S(n, ds);
            for (index_t j = 0; j < ds; ++j)
                for (index_t i = 0; i < n; ++i) X_S(i, j) = stream.normal();
            dmat A = gram_of(X_S.transpose()) / nd;
            A.diagonal().array() += lambda / nd;
            return A.inverse().trace() / static_cast<double>(ds);
        };
        beta_n = run_monte_carlo(beta_task, trials, seed, threads, trials).mean;
    }

    out.limits.beta_n = beta_n;
    out.limits.mr_norm2 = w2 + sigma2 * nd / lambda;
    out.limits.mn_norm2 = w2 + sigma2 * static_cast<double>(n - ds) / lambda +
                          beta_n * (sigma2 * static_cast<double>(ds) - lambda * w2) / nd;
    out.limits.diff = sigma2 * static_cast<double>(ds) / lambda +
                      beta_n * (lambda * w2 - sigma2 * static_cast<double>(ds)) / nd;
    out.limits.mn_size_product = out.limits.mn_norm2 * (static_cast<double>(ds) + lambda) / nd;

    for (index_t dj : d_j_grid) {
        ProblemSpec sp = spec;
        sp.d_J = dj;
        sp.validate();
        double ratio = static_cast<double>(dj) / lambda;

        // Both squared norms come from n x n systems on the Gram blocks:
        // ||w_mn||^2 = Y^T G^{-1} Y and, with A = G_S + (d_J/lambda) G_J and
        // u = A^{-1} E,
        // ||w_mr||^2 = ||w*||^2 + 2 w*.(X_S^T u) + ||X_S^T u||^2 + (d_J/lambda)^2 u^T G_J u.
        auto task = [&, sp, ratio](RngStream& stream) -> dvec {
            SampleSet S = sample_dataset(sp, n, stream);
            dmat G_J = gram_of(S.X_J);
            dmat G_S = ds > 0 ? gram_of(S.X_S) : dmat::Zero(n, n);
            dmat G = G_S + G_J;
            Eigen::LLT<dmat> llt(G);
            if (llt.info() != Eigen::Success)
                throw rank_error("Gram matrix is not positive definite");
            dvec v = llt.solve(S.Y);
            double mn2 = S.Y.dot(v);

            dmat A = G_S + ratio * G_J;
            Eigen::LLT<dmat> lltA(A);
            if (lltA.info() != Eigen::Success)
                throw rank_error("whitened Gram matrix is not positive definite");
            dvec u = lltA.solve(S.E);
            dvec xsu = ds > 0 ? dvec(S.X_S.transpose() * u) : dvec();
            double mr2 = w2 + ratio * ratio * u.dot(G_J * u);
            if (ds > 0) mr2 += 2.0 * sp.w_star_S.dot(xsu) + xsu.squaredNorm();

            dvec r(2);
            r(0) = mr2;
            r(1) = mn2;
            return r;
        };
        auto est = run_monte_carlo_vec(task, 2, trials, seed, threads);
        NormRow row;
        row.d_j = dj;
        row.mr_norm2 = est[0];
        row.mn_norm2 = est[1];
        out.rows.push_back(row);
    }
    return out;
}

std::vector<AlphaRow> alpha_sweep(const ProblemSpec& spec, index_t n,
                                  const std::vector<double>& alphas, index_t trials,
                                  uint64_t seed, int threads) {
    spec.validate();
    if (alphas.empty()) throw usage_error("alpha list must not be empty");
    for (double a : alphas)
        if (a < 1.0) throw domain_error("alpha must be >= 1, got " + std::to_string(a));

    PopulationModel base = PopulationModel::from_spec(spec);
    std::vector<AlphaRow> out;
    for (double alpha : alphas) {
        auto task = [&, alpha](RngStream& stream) -> double {
            SampleSet S = sample_dataset(spec, n, stream);
            Predictor mn = min_norm(S);
            BallDecomposition ball =
                gap_decomposition_ball(S, base, alpha * mn.w.norm(), GapMode::auto_select);
            return ball.gap.value;
        };
        AlphaRow row;
        row.alpha = alpha;
        row.gap = run_monte_carlo(task, trials, seed, threads);
        row.target = alpha * alpha * spec.sigma2;
        row.tolerance = std::max(3.0 * row.gap.std_error, 0.15 * row.target);
        row.pass = std::abs(row.gap.mean - row.target) <= row.tolerance;
        out.push_back(row);
    }
    return out;
}

FlipResult flip_experiment(const ProblemSpec& spec, index_t n, index_t trials, uint64_t seed,
                           int threads) {
    spec.validate();
    if (n < 1) throw domain_error("flip_experiment requires n >= 1");
    const index_t ds = spec.d_S;
    const double nd = static_cast<double>(n);
    const double beta = spec.junk_scale();

    // Negating the junk block leaves the Gram matrix unchanged, so with
    // v = G^{-1} Y the flipped fit satisfies X w~ = 2 G_S v - Y and
    // ||w~_J||^2 = v^T (G - G_S) v; no p-dimensional vectors are needed.
    auto task = [&](RngStream& stream) -> dvec {
        SampleSet S = sample_dataset(spec, n, stream);
        dmat G = S.gram();
        Eigen::LLT<dmat> llt(G);
        if (llt.info() != Eigen::Success)
            throw rank_error("Gram matrix is not positive definite");
        dvec v = llt.solve(S.Y);

        double ls, junk2;
        dvec wts;
        if (ds > 0) {
            dmat G_S = gram_of(S.X_S);
            dvec gsv = G_S * v;
            ls = 4.0 * (S.Y - gsv).squaredNorm() / nd;
            junk2 = std::max(0.0, v.dot(S.Y) - v.dot(gsv));
            wts = S.X_S.transpose() * v;
        } else {
            ls = 4.0 * S.Y.squaredNorm() / nd;
            junk2 = std::max(0.0, v.dot(S.Y));
            wts = dvec();
        }
        double ld = spec.sigma2 + beta * junk2;
        if (ds > 0) ld += (wts - spec.w_star_S).squaredNorm();

        dvec r(2);
        r(0) = ls;
        r(1) = ld;
        return r;
    };

    auto est = run_monte_carlo_vec(task, 2, trials, seed, threads);
    FlipResult out;
    out.ls_tilde = est[0];
    out.ld_tilde = est[1];
    out.ls_target = 4.0 * spec.sigma2 * static_cast<double>(n - ds) / nd;
    out.ld_target = spec.sigma2;
    return out;
}

std::vector<DescentRow> double_descent_curve(index_t n, const std::vector<index_t>& p_grid,
                                             double sigma2, index_t trials, uint64_t seed,
                                             int threads) {
    if (p_grid.empty()) throw usage_error("p grid must not be empty");
    std::vector<DescentRow> out;
    for (index_t p : p_grid) {
        MrRiskResult r = mr_risk_check(n, p, sigma2, trials, seed, threads);
        DescentRow row;
        row.p = p;
        row.formula = r.formula;
        row.risk = r.estimate;
        out.push_back(row);
    }
    return out;
}

std::vector<SweepRow> consistency_divergence_sweep(const ProblemSpec& tmpl,
                                                   const std::vector<index_t>& n_grid,
                                                   LambdaSchedule schedule, index_t d_j_factor,
                                                   index_t trials, uint64_t seed, int threads) {
    if (n_grid.empty()) throw usage_error("n grid must not be empty");
    if (d_j_factor < 1) throw domain_error("d_J factor must be >= 1");

    std::vector<SweepRow> out;
    for (index_t n : n_grid) {
        ProblemSpec sp = tmpl;
        sp.lambda = lambda_of_n(schedule, n);
        sp.d_J = d_j_factor * n;
        sp.validate();
        const index_t ds = sp.d_S;
        const double beta = sp.junk_scale();
        PopulationModel model = PopulationModel::from_spec(sp);

        auto task = [&, sp, beta](RngStream& stream) -> dvec {
            SampleSet S = sample_dataset(sp, n, stream);
            dmat G_S = ds > 0 ? gram_of(S.X_S) : dmat::Zero(n, n);
            dmat G = G_S + gram_of(S.X_J);
            Eigen::LLT<dmat> llt(G);
            if (llt.info() != Eigen::Success)
                throw rank_error("Gram matrix is not positive definite");
            dvec v = llt.solve(S.Y);
            double mn2 = S.Y.dot(v);
            double junk2 = std::max(0.0, mn2 - v.dot(G_S * v));

            double excess_mn = beta * junk2;
            double kappa = beta;
            if (ds > 0) {
                dvec ws = S.X_S.transpose() * v;
                excess_mn += (ws - sp.w_star_S).squaredNorm();
                // Restricted covariance spectrum for the two-valued diagonal:
                // beta + (1 - beta) nu over eigenvalues nu of I - X_S^T G^{-1} X_S.
                dmat K = dmat::Identity(ds, ds) - S.X_S.transpose() * llt.solve(S.X_S);
                Eigen::SelfAdjointEigenSolver<dmat> es(K, Eigen::EigenvaluesOnly);
                double nu = std::min(1.0, std::max(0.0, es.eigenvalues()(ds - 1)));
                kappa = std::max(kappa, beta + (1.0 - beta) * nu);
            }

            double excess_ridge = sp.w_star_S.squaredNorm();
            if (ds > 0) {
                dmat R = G_S;
                R.diagonal().array() += sp.lambda;
                Eigen::LLT<dmat> lltR(R);
                if (lltR.info() != Eigen::Success)
                    throw rank_error("ridge system is not positive definite");
                dvec wr = S.X_S.transpose() * lltR.solve(S.Y);
                excess_ridge = (wr - sp.w_star_S).squaredNorm();
            }

            CovDeviation dev = cov_deviation_lowrank(S, model, G);

            dvec r(4);
            r(0) = excess_mn;
            r(1) = excess_ridge;
            r(2) = dev.opnorm * mn2;
            r(3) = kappa * mn2;
            return r;
        };

        auto est = run_monte_carlo_vec(task, 4, trials, seed, threads);
        SweepRow row;
        row.n = n;
        row.lambda = sp.lambda;
        row.d_j = sp.d_J;
        row.excess_mn = est[0];
        row.excess_ridge = est[1];
        row.dev_product = est[2];
        row.kappa_product = est[3];
        out.push_back(row);
    }
    return out;
}

std::vector<RidgeEquivRow> ridge_equivalence_curve(const ProblemSpec& spec, index_t n,
                                                   const std::vector<index_t>& d_j_grid,
                                                   index_t trials, uint64_t seed, int threads) {
    spec.validate();
    if (spec.d_S < 1)
        throw domain_error("ridge equivalence requires at least one signal coordinate");
    if (d_j_grid.empty()) throw usage_error("d_J grid must not be empty");
    const index_t ds = spec.d_S;

    std::vector<RidgeEquivRow> out;
    for (index_t dj : d_j_grid) {
        ProblemSpec sp = spec;
        sp.d_J = dj;
        sp.validate();
        double scale = std::sqrt(sp.junk_scale());

        auto task = [&, sp, scale](RngStream& stream) -> dvec {
            SampleSet S = sample_dataset(sp, n, stream);
            dmat G_S = gram_of(S.X_S);
            dmat G = G_S + gram_of(S.X_J);
            Eigen::LLT<dmat> llt(G);
            if (llt.info() != Eigen::Success)
                throw rank_error("Gram matrix is not positive definite");
            dvec v = llt.solve(S.Y);
            dvec wmns = S.X_S.transpose() * v;

            dmat R = G_S;
            R.diagonal().array() += sp.lambda;
            Eigen::LLT<dmat> lltR(R);
            if (lltR.info() != Eigen::Success)
                throw rank_error("ridge system is not positive definite");
            dvec wr = S.X_S.transpose() * lltR.solve(S.Y);

            // Fresh junk draw, same covariance as the training junk block.
            dvec xj(sp.d_J);
            for (index_t i = 0; i < sp.d_J; ++i) xj(i) = scale * stream.normal();
            double pred = std::abs(v.dot(S.X_J * xj));

            dvec r(3);
            r(0) = (wmns - wr).norm();
            r(1) = pred;
            r(2) = wr.norm();
            return r;
        };

        auto est = run_monte_carlo_vec(task, 3, trials, seed, threads);
        RidgeEquivRow row;
        row.d_j = dj;
        row.signal_err = est[0];
        row.junk_pred = est[1];
        row.ridge_norm = est[2];
        out.push_back(row);
    }
    return out;
}

}  // namespace interplab
