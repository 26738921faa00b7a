#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "amp/ensembles.hpp"
#include "amp/spiked.hpp"

using namespace amp;

TEST_CASE("goe at n=1 has variance 2") {
    double s = 0, s2 = 0;
    const int N = 40000;
    for (int r = 0; r < N; ++r) {
        RngStream rng(1, r);
        const double x = sample_goe(1, rng)(0, 0);
        s += x, s2 += x * x;
    }
    const double var = s2 / N - (s / N) * (s / N);
    CHECK(var == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("goe off-diagonal variance pooled over 50 draws") {
    const int n = 1000;
    double s2 = 0;
    long count = 0;
    for (int r = 0; r < 50; ++r) {
        RngStream rng(2, r);
        const Mat W = sample_goe(n, rng);
        CHECK(W.isApprox(W.transpose(), 0.0));
        for (int j = 0; j < n; ++j)
            for (int i = j + 1; i < n; ++i) s2 += W(i, j) * W(i, j), ++count;
    }
    CHECK(s2 / count == doctest::Approx(1.0 / n).epsilon(0.05));
}

TEST_CASE("goe is deterministic per seed and stream") {
    RngStream a(3, 7), b(3, 7), c(3, 8);
    const Mat A = sample_goe(50, a), B = sample_goe(50, b), C = sample_goe(50, c);
    CHECK((A.array() == B.array()).all());
    CHECK(!(A.array() == C.array()).all());
}

TEST_CASE("design at n=p=1 is standard normal") {
    double s2 = 0;
    const int N = 40000;
    for (int r = 0; r < N; ++r) {
        RngStream rng(4, r);
        const double x = sample_design(1, 1, rng)(0, 0);
        s2 += x * x;
    }
    CHECK(s2 / N == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("design row norms follow the scaled chi-square law") {
    const int n = 2000, p = 1000;
    RngStream rng(5, 0);
    const Mat X = sample_design(n, p, rng);
    int inside = 0;
    for (int i = 0; i < n; ++i) {
        const double r = X.row(i).squaredNorm();
        inside += std::abs(r - 0.5) <= 0.05;
    }
    // n ||x_i||^2 ~ chi^2_p; the fraction within 10% of p/n is fixed by the chi-square law (about 97.5%).
    boost::math::chi_squared chi(p);
    const double expected = boost::math::cdf(chi, 0.55 * n) - boost::math::cdf(chi, 0.45 * n);
    CHECK(expected > 0.97);
    CHECK(double(inside) / n == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("design column mean is centred") {
    const int n = 100000;
    RngStream rng(6, 0);
    const Mat X = sample_design(n, 1, rng);
    const double mean = (X.col(0) * std::sqrt(double(n))).mean();
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(double(n)));
}

TEST_CASE("leading eigenpair of diag(3,1)") {
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = 3, A(1, 1) = 1;
    for (EigenMethod m : {EigenMethod::Lanczos, EigenMethod::Power}) {
        EigenOptions o;
        o.method = m;
        const EigenPair ep = leading_eigenpair(A, o);
        CHECK(ep.value == doctest::Approx(3.0).epsilon(1e-10));
        CHECK(std::abs(ep.vector[0]) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
        CHECK(std::abs(ep.vector[1]) < 1e-6);
        CHECK(ep.vector[0] > 0);  // deterministic sign: largest entry positive
    }
}

TEST_CASE("power method and Lanczos agree on a spiked matrix") {
    RngStream rng(7, 0);
    const SpikedInstance inst = sample_spiked(Prior::rademacher(), 2.0, 300, rng);
    EigenOptions lo, po;
    po.method = EigenMethod::Power;
    const EigenPair a = leading_eigenpair(inst.A, lo, &inst.v), b = leading_eigenpair(inst.A, po, &inst.v);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-8));
    CHECK((a.vector - b.vector).norm() / std::sqrt(300.0) < 1e-4);
    CHECK(a.vector.dot(inst.v) >= 0);
}
