#include <doctest.h>

#include <cmath>

#include "amp/spiked.hpp"

using namespace amp;

TEST_CASE("spiked instance construction") {
    RngStream r1(21, 0), r2(21, 0);
    const SpikedInstance a = sample_spiked(Prior::rademacher(), 0.0, 150, r1);
    CHECK((a.A - a.W).norm() == 0.0);
    const SpikedInstance b = sample_spiked(Prior::rademacher(), 1.5, 150, r2);
    CHECK(norm_n(b.v) == doctest::Approx(1.0));
    CHECK((b.A - b.W - (1.5 / 150.0) * b.v * b.v.transpose()).norm() < 1e-12);
}

TEST_CASE("constant zero initialisation stays at zero") {
    RngStream rng(22, 0);
    const SpikedInstance inst = sample_spiked(Prior::rademacher(), 1.7, 300, rng);
    SpikedRunOptions o;
    o.K = 4;
    o.init = InitSpec::constant(0.0);
    const SpikedRun r = run_spiked(inst, Prior::rademacher(), o, rng);
    for (const Vec& x : r.run.vhat) CHECK(x.norm() == 0.0);
}

TEST_CASE("lambda estimate from the top eigenvalue") {
    const double lambda = 1.7;
    CHECK(std::abs(*lambda_hat_from_eigenvalue(lambda + 1 / lambda) - lambda) < 1e-12);
    CHECK(std::abs(*lambda_hat_from_eigenvalue(2.28824) - lambda) < 1e-5);
    CHECK(*lambda_hat_from_eigenvalue(2.0) == 1.0);
    CHECK_FALSE(lambda_hat_from_eigenvalue(1.9).has_value());
}

TEST_CASE("empirical Bayes parameters track state evolution") {
    RngStream rng(23, 0);
    const SpikedInstance inst = sample_spiked(Prior::rademacher(), 2.0, 2000, rng);
    SpikedRunOptions o;
    o.K = 5;
    const SpikedRun r = run_spiked(inst, Prior::rademacher(), o, rng);
    for (int k = 1; k < o.K; ++k) {
        const EBParams eb = empirical_bayes_params(r.run, k, r.eig->value);
        CHECK(std::abs(eb.mu_hat - r.se.mu[k]) < 0.05);
        CHECK(std::abs(eb.sigma_hat - r.se.sigma[k]) < 0.05);
        REQUIRE(eb.lambda_hat.has_value());
        CHECK(std::abs(*eb.lambda_hat - 2.0) < 0.05);
    }
    const InferenceOutput full = confidence_sets(r.run, 3, 1.0, r.eig->value);
    for (std::size_t i = 0; i < full.lo.size(); ++i) CHECK(full.lo[i] == full.hi[i]);
    const InferenceOutput ci = confidence_sets(r.run, 3, 0.05, r.eig->value);
    int covered = 0;
    for (std::size_t i = 0; i < ci.lo.size(); ++i) covered += ci.lo[i] <= inst.v[i] && inst.v[i] <= ci.hi[i];
    CHECK(std::abs(covered / double(ci.lo.size()) - 0.95) < 0.03);
    CHECK_THROWS_AS(confidence_sets(r.run, 3, 0.0), AmpError);
}

TEST_CASE("rectangular spiked AMP") {
    SUBCASE("first u-iterate is A f0(v0)") {
        RngStream rng(24, 0);
        const RectInstance inst = sample_rect_spiked(Prior::rademacher(), Prior::rademacher(), 1.5, 200, 100, rng);
        const SideDenoiser id{[](double x, double) { return x; }, [](double, double) { return 1.0; }, "id"};
        const Vec v0 = rng.normal_vec(100);
        const AmpRun r = run_rect_spiked(inst.A, constant_seq(id), constant_seq(id), v0, 3);
        CHECK((r.e[0] - inst.A * v0).norm() < 1e-12 * r.e[0].norm());
    }
    SUBCASE("no spike leaves no spectral seed") {
        RngStream rng(25, 0);
        const RectInstance inst = sample_rect_spiked(Prior::rademacher(), Prior::rademacher(), 0.0, 1000, 500, rng);
        CHECK_THROWS_AS(rect_bayes_amp(inst, Prior::rademacher(), Prior::rademacher(), 5), AmpError);
    }
    SUBCASE("correlation improves above the transition") {
        std::vector<double> mean(6, 0.0);
        for (int rep = 0; rep < 10; ++rep) {
            RngStream rng(26, rep);
            const RectInstance inst =
                sample_rect_spiked(Prior::rademacher(), Prior::rademacher(), 1.5, 1000, 500, rng);
            const RectBayesRun r = rect_bayes_amp(inst, Prior::rademacher(), Prior::rademacher(), 6);
            for (int k = 0; k < 6; ++k) mean[k] += r.corr_v[k] / 10;
        }
        for (int k = 1; k < 6; ++k) CHECK(mean[k] >= mean[k - 1] - 1e-3);
        CHECK(mean[5] > mean[0]);
    }
}

TEST_CASE("linear AMP reproduces the power method") {
    const double lambda = 1.7;
    RngStream rng(27, 0);
    const SpikedInstance inst = sample_spiked(Prior::rademacher(), lambda, 4000, rng);
    const PowerReport rep = power_equivalence_check(inst, 0.5, 20, rng);
    for (std::size_t k = 1; k < rep.mu.size(); ++k) CHECK(rep.mu[k] >= rep.mu[k - 1]);
    CHECK(std::abs(rep.mu.back() - std::sqrt(lambda * lambda - 1)) < 1e-3);
    CHECK((rep.beta[0] * rep.run.vhat[1] - inst.A * rep.run.vhat[0]).norm() < 1e-10 * rep.run.vhat[1].norm());
    CHECK(rep.alignment.back() >= 0.98);
    CHECK(rep.alignment.back() > rep.alignment.front());
}
