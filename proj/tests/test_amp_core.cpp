#include <doctest.h>

#include <cmath>

#include "amp/amp_core.hpp"
#include "amp/ensembles.hpp"
#include "amp/se.hpp"

using namespace amp;

namespace {
SideDenoiser tanh_side() {
    return {[](double x, double) { return std::tanh(x); },
            [](double x, double) { return 1 - std::tanh(x) * std::tanh(x); }, "tanh"};
}
SideDenoiser identity_side() {
    return {[](double x, double) { return x; }, [](double, double) { return 1.0; }, "id"};
}
}  // namespace

TEST_CASE("symmetric AMP basic structure") {
    RngStream rng(11, 0);
    const Mat W = sample_goe(200, rng);
    const Vec m0 = rng.normal_vec(200);
    SUBCASE("first iterate is W m0") {
        const AmpRun r = run_symmetric(W, Vec(), m0, constant_seq(tanh_side()), 3);
        CHECK((r.h[1] - W * m0).norm() == 0.0);
    }
    SUBCASE("zero denoiser gives zero iterates after the first") {
        const SideDenoiser zero{[](double, double) { return 0.0; }, [](double, double) { return 0.0; }, "zero"};
        const AmpRun r = run_symmetric(W, Vec(), m0, constant_seq(zero), 4);
        for (int k = 2; k <= 4; ++k) CHECK(r.h[k].norm() == 0.0);
    }
    SUBCASE("identity denoiser Onsager term equals one") {
        const AmpRun r = run_symmetric(W, Vec(), m0, constant_seq(identity_side()), 3);
        for (int k = 1; k < 3; ++k) CHECK(r.b[k] == doctest::Approx(1.0));
        CHECK((r.h[2] - (W * r.h[1] - m0)).norm() < 1e-12 * r.h[2].norm());
    }
}

TEST_CASE("symmetric AMP norms follow state evolution") {
    const int n = 4000, K = 5;
    RngStream rng(12, 0);
    const Mat W = sample_goe(n, rng);
    const Vec m0 = Vec::Constant(n, 0.8);
    const AmpRun r = run_symmetric(W, Vec(), m0, constant_seq(tanh_side()), K);
    std::vector<SideDenoiser> f(K + 1, tanh_side());
    const SEPath se = se_symmetric(f, Prior::point(0.0), norm_n(m0), K);
    for (int k = 1; k <= K; ++k) CHECK(std::abs(norm_n(r.h[k]) / se.tau[k] - 1) < 0.05);
    for (int k = 1; k < K; ++k) CHECK(std::abs(r.b[k] - se.onsager_b[k]) < 0.02);
}

TEST_CASE("asymmetric AMP structure and state evolution") {
    const int n = 2000, p = 1000, K = 4;
    RngStream rng(13, 0);
    const Mat W = sample_design(n, p, rng);
    const Vec m0 = rng.normal_vec(p);
    const AmpRun r = run_asymmetric(W, Vec(), Vec(), constant_seq(tanh_side()), constant_seq(tanh_side()), m0, 0.0, K);
    CHECK((r.e[0] - W * m0).norm() == 0.0);
    CHECK((r.h[1] - (W.transpose() * r.q[0] - r.c[0] * m0)).norm() < 1e-12 * r.h[1].norm());
    std::vector<SideDenoiser> g(K, tanh_side()), f(K + 1, tanh_side());
    const double sigma0 = std::sqrt(m0.squaredNorm() / n);
    const SEPath se = se_asymmetric(g, f, Prior::point(0.0), Prior::point(0.0), double(n) / p, sigma0, K);
    for (int k = 0; k < K; ++k) CHECK(std::abs(norm_n(r.e[k]) / se.sigma[k] - 1) < 0.05);
    for (int k = 1; k <= K; ++k) CHECK(std::abs(norm_n(r.h[k]) / se.tau[k] - 1) < 0.05);
}

TEST_CASE("matrix AMP with one column matches the vector recursion") {
    const int n = 300, p = 200, K = 4;
    RngStream rng(14, 0);
    const Mat W = sample_design(n, p, rng);
    const Vec m0 = rng.normal_vec(p);
    const AmpRun a = run_asymmetric(W, Vec(), Vec(), constant_seq(tanh_side()), constant_seq(tanh_side()), m0, 0.0, K);
    RowMap t;
    t.eval = [](const Vec& x, double, int, const Mat&) { return Vec(x.array().tanh()); };
    t.jac = [](const Vec& x, double, int, const Mat&) {
        Mat J(1, 1);
        J(0, 0) = 1 - std::tanh(x[0]) * std::tanh(x[0]);
        return J;
    };
    const AmpRun b = run_matrix(W, Vec(), Vec(), t, t, m0, Mat::Zero(1, 1), K);
    for (int k = 0; k < K; ++k) {
        CHECK((b.E[k].col(0) - a.e[k]).norm() <= 1e-12 * a.e[k].norm());
        CHECK((b.H[k + 1].col(0) - a.h[k + 1]).norm() <= 1e-12 * a.h[k + 1].norm());
    }
}

TEST_CASE("Onsager modes") {
    RngStream rng(15, 0);
    const Mat W = sample_goe(100, rng);
    const Vec m0 = rng.normal_vec(100);
    const AmpRun z = run_symmetric(W, Vec(), m0, constant_seq(tanh_side()), 3, {OnsagerMode::zero()});
    for (int k = 1; k < 3; ++k) CHECK(z.b[k] == 0.0);
    CHECK((z.h[2] - W * z.m[1]).norm() == 0.0);
    const AmpRun d =
        run_symmetric(W, Vec(), m0, constant_seq(tanh_side()), 3, {OnsagerMode::deterministic({0, 0.25, 0.25, 0.25})});
    CHECK(d.b[1] == 0.25);
    CHECK_THROWS_AS(run_symmetric(W, Vec(), Vec::Ones(5), constant_seq(tanh_side()), 3), AmpError);
}
