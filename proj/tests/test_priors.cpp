#include <doctest.h>

#include "amp/denoiser.hpp"
#include "amp/loss.hpp"
#include "amp/prior.hpp"
#include "oracle.hpp"

using namespace amp;

TEST_CASE("posterior mean for a symmetric two-point prior is tanh") {
    const Prior p = Prior::rademacher();
    for (double mu : {0.3, 1.0, 2.5})
        for (double sigma : {0.5, 1.0, 2.0})
            for (double y : {-3.0, -0.2, 0.0, 1.7})
                CHECK(p.posterior_mean(mu, sigma, y) == doctest::Approx(std::tanh(mu * y / (sigma * sigma))).epsilon(1e-12));
}

TEST_CASE("posterior mean without signal is the prior mean") {
    const Prior p = Prior::discrete({{0.0, 0.75}, {2.0, 0.25}});
    for (double y : {-4.0, 0.0, 3.0}) CHECK(p.posterior_mean(0.0, 1.0, y) == doctest::Approx(0.5));
}

TEST_CASE("posterior mean for a two-atom prior by hand") {
    const Prior p = Prior::discrete({{0.0, 0.75}, {2.0, 0.25}});
    const double mu = 1.0, sigma = 1.0, y = 1.0;
    const double w0 = 0.75 * oracle::phi(y / sigma), w2 = 0.25 * oracle::phi((y - 2 * mu) / sigma);
    CHECK(p.posterior_mean(mu, sigma, y) == doctest::Approx(2 * w2 / (w0 + w2)).epsilon(1e-12));
    CHECK(p.posterior_mean(mu, sigma, y) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("posterior mean derivative matches finite differences") {
    const Prior p = Prior::mixture({{0.0, 0.5, 0.4}, {1.5, 0.3, 0.6}});
    for (double y : {-1.0, 0.3, 2.0}) {
        const double h = 1e-5;
        const double fd = (p.posterior_mean(1.2, 0.7, y + h) - p.posterior_mean(1.2, 0.7, y - h)) / (2 * h);
        CHECK(p.posterior_mean_deriv(1.2, 0.7, y) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("mmse endpoints") {
    const Prior r = Prior::rademacher();
    CHECK(r.mmse(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.mmse(INFINITY) == 0.0);
    const Prior s = Prior::discrete({{0.0, 0.75}, {2.0, 0.25}});
    CHECK(1 - s.mmse(0.0) == doctest::Approx(s.m1() * s.m1()).epsilon(1e-12));
}

TEST_CASE("mmse of a two-point prior against Monte Carlo") {
    const double rho = 1.89;
    const double mc = oracle::monte_carlo(10000000, 11, [&](std::mt19937_64& g) {
        const double v = (g() & 1) ? 1.0 : -1.0;
        const double e = v - std::tanh(rho * v + std::sqrt(rho) * oracle::normal(g));
        return e * e;
    });
    CHECK(std::abs(Prior::rademacher().mmse(rho) - mc) < 1e-3);
}

TEST_CASE("soft threshold values and weak derivative") {
    CHECK(soft_threshold(1.0, 0.0).value == 0.0);
    CHECK(soft_threshold(1.0, 0.0).deriv == 0.0);
    CHECK(soft_threshold(1.0, 2.5).value == 1.5);
    CHECK(soft_threshold(1.0, 2.5).deriv == 1.0);
    CHECK(soft_threshold(1.0, -1.0).value == 0.0);
    CHECK(soft_threshold(1.0, -1.0).deriv == 0.0);
    CHECK(soft_threshold(1.0, -3.0).value == -2.0);
}

TEST_CASE("prox closed forms") {
    CHECK(prox(Loss::square(), 1.0, 2.0) == doctest::Approx(1.0));
    for (double t : {0.5, 1.0, 2.0})
        for (double x : {-3.0, -0.4, 0.0, 0.9, 4.0}) CHECK(prox(Loss::absolute(), t, x) == doctest::Approx(soft_threshold(t, x).value));
}

TEST_CASE("logistic prox against bisection on the optimality condition") {
    for (double eta : {0.3, 1.0, 5.0})
        for (double z : {-2.0, 0.0, 3.0}) {
            const double ref = oracle::bisect([&](double t) { return t + eta / (1 + std::exp(-t)) - z; }, -40, 40);
            CHECK(std::abs(prox(Loss::logistic(), eta, z) - ref) < 1e-12);
        }
    // eta = 1, z = 0: root of zeta'(t) + t = 0
    const double t = prox(Loss::logistic(), 1.0, 0.0);
    CHECK(std::abs(zeta1(t) + t) < 1e-12);
}

TEST_CASE("moreau score identities") {
    for (double b : {0.2, 1.0, 3.0})
        for (double z : {-2.0, 0.5}) {
            const auto [s, ds] = moreau_score(Loss::square(), b, z);
            CHECK(s == doctest::Approx(z * b / (1 + b)));
            CHECK(ds == doctest::Approx(b / (1 + b)));
        }
    for (const Loss& l : {Loss::square(), Loss::absolute(), Loss::huber(1.0), Loss::pseudo_huber(2.0), Loss::quantile(0.3)})
        CHECK(moreau_score(l, 1.3, 0.0).first == doctest::Approx(0.0));
    CHECK(moreau_score(Loss::huber(1.0), 1.0, 10.0).first == doctest::Approx(1.0));
}

TEST_CASE("pseudo-Huber prox derivative matches finite differences") {
    const Loss l = Loss::pseudo_huber(1.0);
    for (double eta : {0.5, 5.62})
        for (double z : {-4.0, 0.2, 3.18}) {
            const double h = 1e-6;
            const double fd = (prox(l, eta, z + h) - prox(l, eta, z - h)) / (2 * h);
            CHECK(prox_deriv(l, eta, z) == doctest::Approx(fd).epsilon(1e-6));
        }
}

TEST_CASE("denoiser catalogue declares consistent derivatives") {
    const ScalarDenoiser d = posterior_mean_denoiser(Prior::rademacher(), 1.2, 0.8);
    for (double x : {-1.0, 0.0, 2.0}) {
        const double h = 1e-6;
        CHECK(d.deriv(x) == doctest::Approx((d(x + h) - d(x - h)) / (2 * h)).epsilon(1e-6));
    }
    CHECK(estimate_lipschitz([](double x) { return std::tanh(2 * x); }, -5, 5) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("invalid laws are rejected") {
    CHECK_THROWS_AS(Prior::discrete({{0.0, -1.0}, {1.0, 2.0}}), AmpError);
    CHECK_THROWS_AS(Loss::huber(-1.0), AmpError);
    CHECK_THROWS_AS(Prior::rademacher().posterior_mean(1.0, -1.0, 0.0), AmpError);
}
