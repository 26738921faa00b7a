#include <doctest.h>

#include "amp/se.hpp"
#include "oracle.hpp"

using namespace amp;

namespace {
SideDenoiser side(std::function<double(double)> f, std::function<double(double)> df) {
    return {[f](double x, double) { return f(x); }, [df](double x, double) { return df(x); }, "test"};
}
Prior sparse_prior() { return Prior::discrete({{0.0, 0.75}, {2.0, 0.25}}); }
}  // namespace

TEST_CASE("gaussian expectations") {
    const GaussQuad q;
    CHECK(std::abs(q.expect([](double g) { return g * g; }) - 1.0) < 1e-10);
    const double mc = oracle::monte_carlo(10000000, 21, [](std::mt19937_64& g) {
        const double t = std::tanh(oracle::normal(g) + 1.0);
        return t * t;
    });
    CHECK(std::abs(q.expect([](double g) { return std::pow(std::tanh(g + 1.0), 2); }) - mc) < 3e-4);
    // Stein's identity E G f(G) = E f'(G) for the soft threshold.
    const double lhs = q.expect_kinked([](double g) { return g * soft_threshold(1.0, g).value; }, {-1.0, 1.0});
    const double rhs = q.expect_kinked([](double g) { return soft_threshold(1.0, g).deriv; }, {-1.0, 1.0});
    CHECK(std::abs(lhs - rhs) < 1e-8);
    CHECK(std::abs(rhs - 2 * oracle::Phi(-1.0)) < 1e-10);
}

TEST_CASE("symmetric state evolution") {
    SUBCASE("identity denoisers keep tau constant") {
        std::vector<SideDenoiser> f(6, side([](double x) { return x; }, [](double) { return 1.0; }));
        const SEPath p = se_symmetric(f, Prior::rademacher(), 1.3, 5);
        for (int k = 1; k <= 5; ++k) CHECK(p.tau[k] == doctest::Approx(1.3).epsilon(1e-12));
    }
    SUBCASE("tanh denoisers against a scalar Monte Carlo of the recursion") {
        std::vector<SideDenoiser> f(6, side([](double x) { return std::tanh(x); },
                                            [](double x) { return 1 - std::pow(std::tanh(x), 2); }));
        const SEPath p = se_symmetric(f, Prior::rademacher(), 1.0, 5);
        double tau = 1.0;
        for (int k = 1; k <= 5; ++k) {
            CHECK(std::abs(p.tau[k] * p.tau[k] - tau * tau) < 1e-3);
            const double t2 = oracle::monte_carlo(1000000, 100 + k, [tau](std::mt19937_64& g) {
                return std::pow(std::tanh(tau * oracle::normal(g)), 2);
            });
            tau = std::sqrt(t2);
        }
    }
    SUBCASE("zero denoiser is rejected") {
        std::vector<SideDenoiser> f(4, side([](double) { return 0.0; }, [](double) { return 0.0; }));
        CHECK_THROWS_AS(se_symmetric(f, Prior::rademacher(), 1.0, 3), AmpError);
    }
}

TEST_CASE("spiked state evolution") {
    const double lambda = 1.7;
    SUBCASE("centred prior with mu0 = 0 is uninformative") {
        const SEPath p = se_spiked(Prior::rademacher(), lambda, 0.0, 1.0, SpikedPolicy::bayes(), 8);
        for (double m : p.mu) CHECK(m == 0.0);
    }
    SUBCASE("spectral seeds and convergence to rho*") {
        const SEPath p = se_spiked(Prior::rademacher(), lambda, std::sqrt(1 - 1 / (lambda * lambda)), 1 / lambda,
                                   SpikedPolicy::bayes(), 100);
        CHECK(p.rho[0] == doctest::Approx(lambda * lambda - 1).epsilon(1e-12));
        for (std::size_t k = 1; k < 30; ++k) CHECK(p.rho[k] > p.rho[k - 1]);
        const RhoFixedPoint fp = rho_star(Prior::rademacher(), lambda, lambda * lambda - 1);
        CHECK(std::abs(p.rho.back() - fp.rho) < 1e-8);
        CHECK(fp.residual < 1e-9);
        CHECK(std::abs(fp.rho - bayes_map(Prior::rademacher(), lambda, fp.rho)) < 1e-9);
    }
    SUBCASE("power-linear mu recursion converges to sqrt(lambda^2 - 1)") {
        const auto mu = power_linear_mu(lambda, 1.0, 60);
        for (std::size_t k = 1; k < mu.size(); ++k) CHECK(mu[k] >= mu[k - 1] - 1e-15);
        CHECK(mu.back() == doctest::Approx(std::sqrt(lambda * lambda - 1)).epsilon(1e-10));
    }
}

TEST_CASE("rho* trajectories") {
    const RhoFixedPoint z = rho_star(Prior::rademacher(), 0.5, 0.0);
    CHECK(z.degenerate);
    CHECK(z.rho == 0.0);
    const RhoFixedPoint s = rho_star(sparse_prior(), 1.7, 0.0);
    CHECK(s.path.at(1) == doctest::Approx(1.7 * 1.7 * 0.25).epsilon(1e-12));
    for (std::size_t k = 1; k < s.path.size(); ++k) CHECK(s.path[k] >= s.path[k - 1]);
    CHECK(std::abs(s.rho - bayes_map(sparse_prior(), 1.7, s.rho)) < 1e-9);
}

TEST_CASE("asymmetric state evolution with linear denoisers") {
    // g(u) = u, f(x) = x: sigma_k^2 = tau_k^2 / delta and tau_{k+1}^2 = sigma_k^2.
    std::vector<SideDenoiser> g(3, side([](double x) { return x; }, [](double) { return 1.0; }));
    std::vector<SideDenoiser> f(4, side([](double x) { return x; }, [](double) { return 1.0; }));
    const SEPath p = se_asymmetric(g, f, Prior::rademacher(), Prior::rademacher(), 2.0, 1.0, 3);
    CHECK(p.sigma[0] == doctest::Approx(1.0));
    CHECK(p.tau[1] == doctest::Approx(1.0));
    CHECK(p.sigma[1] == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("gamp state evolution") {
    const Prior prior = Prior::discrete({{0.0, 0.9}, {std::sqrt(10.0), 0.05}, {-std::sqrt(10.0), 0.05}});
    const double delta = 0.5, sigma = 0.2;
    const int K = 6;
    std::vector<GampG> g(K, GampG{[](double u, double y) { return y - u; }, [](double, double) { return -1.0; }});
    std::vector<GampF> f;
    for (int k = 0; k <= K; ++k)
        f.push_back({[](double x) { return soft_threshold(1.0, x).value; }, [](double x) { return soft_threshold(1.0, x).deriv; },
                     {-1.0, 1.0}});
    Mat S0(2, 2);
    S0 << prior.m2() / delta, 0, 0, 0;
    const SEPath p = se_gamp(prior, Prior::gaussian(0, sigma), Link::linear(), delta, g, f, S0, K);
    CHECK(p.sigma[1] * p.sigma[1] == doctest::Approx(sigma * sigma + prior.m2() / delta).epsilon(1e-12));
    for (int k = 1; k <= K; ++k) CHECK(p.mu[k] == doctest::Approx(1.0).epsilon(1e-10));
    for (int k = 0; k < K; ++k) CHECK(p.onsager_c[k] == doctest::Approx(-1.0));
    const SEPath l = se_linear(prior, sigma * sigma, delta, p.sigma[1], f, K);
    for (int k = 1; k <= K; ++k) CHECK(l.sigma[k] == doctest::Approx(p.sigma[k]).epsilon(1e-9));
}

TEST_CASE("gamp state evolution step for the logistic link against Monte Carlo") {
    const Prior prior = Prior::gaussian(0.0, 1.0);
    const double delta = 2.0;
    const double s11 = 0.5, s12 = 0.2, s22 = 0.3;
    Mat S0(2, 2);
    S0 << s11, s12, s12, s22;
    std::vector<GampG> g{{[](double u, double y) { return y - zeta1(u); }, [](double u, double) { return -zeta2(u); }}};
    std::vector<GampF> f(2, GampF{[](double x) { return x; }, [](double) { return 1.0; }, {}});
    const SEPath p = se_gamp(prior, Prior::point(0.0), Link::logistic(), delta, g, f, S0, 1);
    const double muZ = s12 / s11, sZ = std::sqrt(s22 - s12 * s12 / s11);
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> unif;
    double ezg = 0, edg = 0, eg2 = 0;
    const int N = 1000000;
    for (int i = 0; i < N; ++i) {
        const double z = std::sqrt(s11) * oracle::normal(gen);
        const double zk = muZ * z + sZ * oracle::normal(gen);
        const double y = unif(gen) < zeta1(z) ? 1.0 : 0.0;
        const double v = y - zeta1(zk);
        ezg += z * v, edg += -zeta2(zk), eg2 += v * v;
    }
    ezg /= N, edg /= N, eg2 /= N;
    CHECK(std::abs(p.mu[1] - (ezg / s11 - muZ * edg)) < 2e-3);
    CHECK(std::abs(p.sigma[1] * p.sigma[1] - eg2) < 2e-3);
    CHECK(std::abs(p.onsager_c[0] - edg) < 2e-3);
}

TEST_CASE("lasso calibration") {
    CHECK(upsilon(0.0) == doctest::Approx(0.5));
    const Prior prior = Prior::discrete({{0.0, 0.9}, {std::sqrt(10.0), 0.05}, {-std::sqrt(10.0), 0.05}});
    const LassoFixedPoint fp = lasso_calibration(1.0, 0.5, 0.2, prior);
    CHECK(std::max({fp.res_sigma, fp.res_t, fp.res_lambda}) < 1e-9);
    CHECK(fp.alpha > fp.alpha0);
}

TEST_CASE("lasso calibration for a null signal against closed forms") {
    // With beta = 0: E ST_t(s G)^2 = 2 s^2 upsilon(t/s) and P(|s G| > t) = 2 Phi(-t/s).
    const double delta = 0.8, sigma = 0.5, lambda = 1.0;
    auto s_of = [&](double a) { return sigma / std::sqrt(1 - 2 * upsilon(a) / delta); };
    auto Lam = [&](double a) { return a * s_of(a) * (1 - 2 * oracle::Phi(-a) / delta); };
    // Scan for a bracket above the admissibility boundary, then bisect.
    double lo = 0.0;
    while (2 * upsilon(lo) >= delta) lo += 1e-3;
    double hi = lo;
    while (Lam(hi) < lambda) hi += 0.05;
    const double a = oracle::bisect([&](double x) { return Lam(x) - lambda; }, hi - 0.05, hi);
    const LassoFixedPoint fp = lasso_calibration(lambda, delta, sigma, Prior::point(0.0));
    CHECK(std::abs(fp.sigma - s_of(a)) < 1e-4);
    CHECK(std::abs(fp.t - a * s_of(a)) < 1e-4);
}

TEST_CASE("m-estimation fixed point") {
    SUBCASE("square loss closed form") {
        for (double delta : {1.5, 2.0, 4.0}) {
            const MestFixedPoint fp = mest_fixed_point(Loss::square(), Prior::gaussian(0.0, 1.3), delta);
            CHECK(fp.b == doctest::Approx(1 / (delta - 1)).epsilon(1e-9));
            CHECK(fp.tau * fp.tau == doctest::Approx(1.69 / (delta - 1)).epsilon(1e-9));
            CHECK(std::max(fp.res_b, fp.res_tau) < 1e-9);
        }
    }
    SUBCASE("information bound") {
        const double delta = 2.0;
        for (const Loss& l : {Loss::square(), Loss::pseudo_huber(1.0), Loss::huber(1.0)}) {
            const MestFixedPoint fp = mest_fixed_point(l, Prior::gaussian(0.0, 1.0), delta);
            CHECK(fp.mse() >= 1 / (1 - 1 / delta) * 1.0 - 1e-9);
            CHECK(std::max(fp.res_b, fp.res_tau) < 1e-9);
        }
    }
    CHECK(fisher_information(Prior::gaussian(0.0, 2.0)) == doctest::Approx(0.25));
}

TEST_CASE("logistic fixed point") {
    const LogisticFixedPoint a = logistic_fixed_point(0.2, 5.0);
    CHECK(a.residual < 1e-8);
    CHECK(a.mu > 1);
    const Eigen::Vector3d step = logistic_se_step(0.2, 5.0, a.mu, a.sigma, a.b, GaussQuad());
    CHECK(std::abs(step[0] - a.mu) < 1e-8);
    const LogisticFixedPoint b = logistic_fixed_point(0.3, 5.0);
    CHECK(b.mu > a.mu);
    CHECK_THROWS_AS(logistic_fixed_point(0.2, 0.8), AmpError);
}
