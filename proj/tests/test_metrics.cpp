#include <doctest.h>

#include "amp/metrics.hpp"
#include "amp/quadrature.hpp"
#include "oracle.hpp"

using namespace amp;

namespace {
Vec gaussian_sample(int n, double sd, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = sd * oracle::normal(g);
    return x;
}
}  // namespace

TEST_CASE("w2 basic cases") {
    const Vec x = gaussian_sample(100, 1.0, 1);
    CHECK(w2_univariate(EmpiricalSample(x), EmpiricalSample(x)) == 0.0);
    CHECK(w2_univariate(EmpiricalSample(std::vector<double>{0.0}), EmpiricalSample(std::vector<double>{2.5})) ==
          doctest::Approx(2.5));
}

TEST_CASE("w2 between Gaussians of different scale") {
    for (double sd : {0.5, 1.5}) {
        const Vec x = gaussian_sample(200000, sd, 2);
        const double d = w2_univariate(EmpiricalSample(x), [](double u) { return normal_quantile(u); });
        CHECK(std::abs(d - std::abs(sd - 1)) <= 0.01);
        CHECK(std::abs(w2_normal(x, 0.0, 1.0) - d) < 1e-12);
    }
}

TEST_CASE("ks distance to uniform") {
    std::vector<double> u;
    for (int i = 0; i < 1000; ++i) u.push_back((i + 0.5) / 1000);
    CHECK(ks_uniform(u) == doctest::Approx(0.0005));
    CHECK(ks_uniform({0.0, 0.0}) == doctest::Approx(1.0));
}

TEST_CASE("pl battery on exact reference samples") {
    const int n = 100000;
    const double tau = 1.3;
    const Prior prior = Prior::discrete({{0.0, 0.5}, {1.0, 0.25}, {-1.0, 0.25}});
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u;
    Vec x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = tau * oracle::normal(g);
        const double r = u(g);
        y[i] = r < 0.5 ? 0.0 : (r < 0.75 ? 1.0 : -1.0);
    }
    for (const auto& d : pl_battery_report(x, y, tau, prior)) {
        CHECK_MESSAGE(d.deviation <= 0.02, d.name);
        if (d.name == "x") CHECK(d.deviation == doctest::Approx(std::abs(x.mean())).epsilon(1e-9));
    }
}

TEST_CASE("pl battery detects dependence") {
    const int n = 20000;
    std::mt19937_64 g(4);
    Vec x(n), y(n);
    for (int i = 0; i < n; ++i) {
        const double a = oracle::normal(g), b = oracle::normal(g);
        y[i] = a, x[i] = 0.5 * a + std::sqrt(0.75) * b;
    }
    for (const auto& d : pl_battery_report(x, y, 1.0, Prior::gaussian(0.0, 1.0)))
        if (d.name == "xy") CHECK(d.deviation >= 0.3);
}

TEST_CASE("pl constants are finite for the battery") {
    for (const auto& t : pl_battery(true)) CHECK(std::isfinite(pl_constant(t, t.name == "abs_x3" ? 3 : 2)));
}

TEST_CASE("risk metrics") {
    const Vec v = gaussian_sample(4000, 1.0, 5), w = gaussian_sample(4000, 1.0, 6);
    const RiskMetrics same = risk_metrics(v, v);
    CHECK(same.mse == 0.0);
    CHECK(*same.correlation == doctest::Approx(1.0));
    CHECK(risk_metrics(-v, v).mse_signmin == 0.0);
    CHECK(std::abs(*risk_metrics(w, v).correlation) <= 0.05);
    CHECK(slope_through_origin(2.5 * v, v) == doctest::Approx(2.5));
}
