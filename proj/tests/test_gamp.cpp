#include <doctest.h>

#include <cmath>

#include "amp/ensembles.hpp"
#include "amp/gamp.hpp"
#include "oracle.hpp"

using namespace amp;

namespace {
Prior bernoulli_gauss() { return Prior::discrete({{0.0, 0.9}, {std::sqrt(10.0), 0.05}, {-std::sqrt(10.0), 0.05}}); }
}  // namespace

TEST_CASE("GAMP linear structure") {
    RngStream rng(31, 0);
    const GlmInstance inst = sample_glm(Prior::gaussian(0, 1), Prior::gaussian(0, 0.3), Link::linear(), 300, 150, rng);
    CHECK(inst.delta == doctest::Approx(2.0));
    CHECK((inst.y - inst.X * inst.beta - inst.eps).norm() < 1e-12);
    const int K = 3;
    std::vector<GampG> g(K, GampG{[](double u, double y) { return y - u; }, [](double, double) { return -1.0; }});
    std::vector<GampF> f(K + 1, GampF{[](double x) { return x; }, [](double) { return 1.0; }, {}});
    const AmpRun r = run_gamp(inst, g, f, Vec::Zero(150), 0.0, K);
    CHECK((r.rhat[0] - inst.y).norm() == 0.0);
    CHECK((r.beta[1] - inst.X.transpose() * inst.y).norm() < 1e-12 * r.beta[1].norm());
    for (int k = 0; k < K; ++k) CHECK(r.c[k] == -1.0);
    CHECK(r.b[1] == doctest::Approx(0.5));
    // theta^1 = X betahat^1 - b_1 rhat^0 and rhat^1 = y - theta^1.
    CHECK((r.rhat[1] - (inst.y - (inst.X * r.betahat[1] - 0.5 * r.rhat[0]))).norm() < 1e-10 * r.rhat[1].norm());
}

TEST_CASE("lasso reference solver") {
    RngStream rng(32, 0);
    const Mat X = sample_design(100, 60, rng);
    const Vec y = rng.normal_vec(100);
    SUBCASE("large penalty gives zero") {
        const double lmax = (X.transpose() * y).cwiseAbs().maxCoeff();
        CHECK(lasso_reference(X, y, 1.01 * lmax).beta_hat.norm() == 0.0);
        const EstimatorResult r = lasso_reference(X, y, 0.5 * lmax);
        CHECK(r.beta_hat.norm() > 0);
        CHECK(r.kkt < 1e-8);
        CHECK(lasso_kkt(X, y, r.beta_hat, 0.5 * lmax) == doctest::Approx(r.kkt));
    }
    SUBCASE("zero response gives zero") { CHECK(lasso_reference(X, Vec::Zero(100), 0.1).beta_hat.norm() == 0.0); }
    SUBCASE("identity design is soft thresholding") {
        const Vec z = rng.normal_vec(40);
        const EstimatorResult r = lasso_reference(Mat::Identity(40, 40), z, 0.7);
        for (int i = 0; i < 40; ++i) CHECK(r.beta_hat[i] == doctest::Approx(soft_threshold(0.7, z[i]).value));
    }
}

TEST_CASE("lasso AMP matches the calibrated state evolution") {
    RngStream rng(33, 0);
    const double sigma = 0.2, lambda = 1.0;
    const GlmInstance inst = sample_glm(bernoulli_gauss(), Prior::gaussian(0, sigma), Link::linear(), 2000, 4000, rng);
    const LassoAmpResult a = lasso_amp(inst, bernoulli_gauss(), sigma, lambda, 30, false, rng);
    const EstimatorResult ref = lasso_reference(inst.X, inst.y, lambda);
    CHECK(norm_n(a.run.betahat.back() - ref.beta_hat) < 0.05);
    const auto [mu_hat, sigma_hat] = gamp_se_estimates(a.run, 29, bernoulli_gauss().m2());
    CHECK(std::abs(sigma_hat - a.fp.sigma) < 0.05);
    (void)mu_hat;
}

TEST_CASE("M-estimation AMP and references") {
    RngStream rng(34, 0);
    const GlmInstance inst = sample_glm(Prior::gaussian(0, 1), Prior::gaussian(0, 1), Link::linear(), 1000, 400, rng);
    const EstimatorResult ols = ols_reference(inst.X, inst.y);
    CHECK(mest_kkt(inst.X, inst.y, ols.beta_hat, Loss::square()) < 1e-8);
    const EstimatorResult sq = mest_reference(inst.X, inst.y, Loss::square());
    CHECK(norm_n(sq.beta_hat - ols.beta_hat) < 1e-8);
    const MestAmpResult amp = mest_amp(inst, Loss::square(), Prior::gaussian(0, 1), 60, rng);
    CHECK(norm_n(amp.run.betahat.back() - ols.beta_hat) <= 1e-6);
    const EstimatorResult hub = mest_reference(inst.X, inst.y, Loss::huber(1.0));
    CHECK(hub.converged);
    CHECK(hub.kkt < 1e-8);
}

TEST_CASE("logistic MLE") {
    SUBCASE("separable data has no MLE") {
        RngStream rng(35, 0);
        const Mat X = sample_design(8, 10, rng);  // fewer rows than columns: X b = 1 is solvable
        const EstimatorResult r = logistic_mle_reference(X, Vec::Ones(8));
        CHECK_FALSE(r.exists);
    }
    SUBCASE("single coefficient against bisection on the score") {
        RngStream rng(36, 0);
        const Mat X = rng.normal_vec(200);
        Vec y(200);
        for (int i = 0; i < 200; ++i) y[i] = rng.uniform() < zeta1(0.8 * X(i, 0)) ? 1.0 : 0.0;
        const double ref = oracle::bisect(
            [&](double b) {
                double s = 0;
                for (int i = 0; i < 200; ++i) s += X(i, 0) * (zeta1(X(i, 0) * b) - y[i]);
                return s;
            },
            -20, 20);
        const EstimatorResult r = logistic_mle_reference(X, y);
        CHECK(r.exists);
        CHECK(std::abs(r.beta_hat[0] - ref) < 1e-8);
        CHECK(logistic_grad_norm(X, y, r.beta_hat) < 1e-8);
    }
}

TEST_CASE("logistic GAMP converges to the MLE") {
    RngStream rng(37, 0);
    const double kappa2 = 0.2, delta = 5.0;
    const GlmInstance inst =
        sample_glm(Prior::gaussian(0, std::sqrt(kappa2)), Prior::point(0), Link::logistic(), 4000, 800, rng);
    const LogisticFixedPoint fp = logistic_fixed_point(kappa2, delta);
    const LogisticAmpResult a = logistic_gamp(inst, fp, 40, rng);
    const EstimatorResult mle = logistic_mle_reference(inst.X, inst.y);
    REQUIRE(mle.exists);
    CHECK(norm_n(a.run.betahat.back() - mle.beta_hat) / norm_n(mle.beta_hat) < 0.05);
}

TEST_CASE("state evolution estimates from iterates") {
    AmpRun run;
    run.beta = {Vec(), Vec::Constant(10, 2.0)};
    run.rhat = {Vec::Zero(20)};
    const auto [mu, sigma] = gamp_se_estimates(run, 1, 4.0);
    CHECK(sigma == 0.0);
    CHECK(mu == doctest::Approx(1.0));
}
