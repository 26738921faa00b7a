#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amp/prior.hpp"
#include "amp/quadrature.hpp"
#include "amp/types.hpp"

namespace amp {

// Sorted copy of a sample.
struct EmpiricalSample {
    std::vector<double> values;
    explicit EmpiricalSample(const Vec& x);
    explicit EmpiricalSample(std::vector<double> x);
    std::size_t size() const { return values.size(); }
};

// Exact univariate W2 between equal-size samples by quantile coupling.
double w2_univariate(const EmpiricalSample& a, const EmpiricalSample& b);
// W2 against a quantile function evaluated at plotting positions (i - 1/2)/n.
double w2_univariate(const EmpiricalSample& a, const std::function<double(double)>& quantile);
double w2_normal(const Vec& x, double mean, double sd);

// Kolmogorov-Smirnov distance to Uniform[0,1].
double ks_uniform(std::vector<double> u);

struct PLTest {
    std::string name;
    std::function<double(double, double)> psi;
};
std::vector<PLTest> pl_battery(bool include_r3 = false);

struct PLDeviation {
    std::string name;
    double empirical, reference, deviation;
};
// Reference law: X ~ N(0, tau^2) independent of Y ~ prior.
std::vector<PLDeviation> pl_battery_report(const Vec& x, const Vec& y, double tau, const Prior& prior,
                                           bool include_r3 = false, const GaussQuad& quad = GaussQuad());
// Grid check of |psi(a)-psi(b)| <= L |a-b| (1 + |a|^{r-1} + |b|^{r-1}); returns the smallest valid L seen.
double pl_constant(const PLTest& t, int r = 2);

struct RiskMetrics {
    double mse = 0.0;
    std::optional<double> correlation;
    double mse_signmin = 0.0;
    std::optional<double> correlation_abs;
};
RiskMetrics risk_metrics(const Vec& estimate, const Vec& truth);

// Least-squares slope of est on truth through the origin.
double slope_through_origin(const Vec& est, const Vec& truth);

}  // namespace amp
