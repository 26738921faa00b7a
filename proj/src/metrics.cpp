#include "amp/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace amp {

EmpiricalSample::EmpiricalSample(const Vec& x) : EmpiricalSample(std::vector<double>(x.data(), x.data() + x.size())) {}

EmpiricalSample::EmpiricalSample(std::vector<double> x) : values(std::move(x)) {
    for (double v : values)
        if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "EmpiricalSample: non-finite entry");
    std::sort(values.begin(), values.end());
}

double w2_univariate(const EmpiricalSample& a, const EmpiricalSample& b) {
    require(a.size() > 0 && b.size() > 0, "w2_univariate: empty sample");
    require(a.size() == b.size(), "w2_univariate: samples must have equal size");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    return std::sqrt(s / double(a.size()));
}

double w2_univariate(const EmpiricalSample& a, const std::function<double(double)>& quantile) {
    require(a.size() > 0, "w2_univariate: empty sample");
    const double n = double(a.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values[i] - quantile((double(i) + 0.5) / n);
        s += d * d;
    }
    return std::sqrt(s / n);
}

double w2_normal(const Vec& x, double mean, double sd) {
    return w2_univariate(EmpiricalSample(x), [&](double u) { return mean + sd * normal_quantile(u); });
}

double ks_uniform(std::vector<double> u) {
    require(!u.empty(), "ks_uniform: empty sample");
    std::sort(u.begin(), u.end());
    const double n = double(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        d = std::max({d, (double(i) + 1.0) / n - u[i], u[i] - double(i) / n});
    return d;
}

std::vector<PLTest> pl_battery(bool include_r3) {
    std::vector<PLTest> b = {
        {"x", [](double x, double) { return x; }},
        {"x2", [](double x, double) { return x * x; }},
        {"abs_x", [](double x, double) { return std::abs(x); }},
        {"xy", [](double x, double y) { return x * y; }},
        {"y2", [](double, double y) { return y * y; }},
        {"tanh_x_y", [](double x, double y) { return std::tanh(x) * y; }},
        {"x_minus_y_sq", [](double x, double y) { return (x - y) * (x - y); }},
    };
    if (include_r3) b.push_back({"abs_x3", [](double x, double) { return std::abs(x) * x * x; }});
    return b;
}

std::vector<PLDeviation> pl_battery_report(const Vec& x, const Vec& y, double tau, const Prior& prior,
                                           bool include_r3, const GaussQuad& quad) {
    require(x.size() == y.size() && x.size() > 0, "pl_battery_report: samples must be non-empty and paired");
    std::vector<PLDeviation> out;
    for (const auto& t : pl_battery(include_r3)) {
        double emp = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) emp += t.psi(x[i], y[i]);
        emp /= double(x.size());
        const double ref = quad.expect_joint(prior, 0.0, tau, [&](double v, double g) { return t.psi(g, v); }, {0.0});
        out.push_back({t.name, emp, ref, std::abs(emp - ref)});
    }
    return out;
}

double pl_constant(const PLTest& t, int r) {
    std::vector<double> g;
    for (int i = -10; i <= 10; ++i) g.push_back(0.5 * i);
    double L = 0.0;
    for (double a1 : g)
        for (double a2 : g)
            for (double b1 : g)
                for (double b2 : g) {
                    const double d = std::hypot(a1 - b1, a2 - b2);
                    if (d == 0.0) continue;
                    const double na = std::hypot(a1, a2), nb = std::hypot(b1, b2);
                    const double w = d * (1.0 + std::pow(na, r - 1) + std::pow(nb, r - 1));
                    L = std::max(L, std::abs(t.psi(a1, a2) - t.psi(b1, b2)) / w);
                }
    return L;
}

RiskMetrics risk_metrics(const Vec& e, const Vec& t) {
    require(e.size() == t.size() && e.size() > 0, "risk_metrics: vectors must have equal, positive length");
    RiskMetrics m;
    const double n = double(e.size());
    m.mse = (e - t).squaredNorm() / n;
    m.mse_signmin = std::min(m.mse, (e + t).squaredNorm() / n);
    const double ne = e.norm(), nt = t.norm();
    if (ne > 0 && nt > 0) {
        m.correlation = e.dot(t) / (ne * nt);
        m.correlation_abs = std::abs(*m.correlation);
    }
    return m;
}

double slope_through_origin(const Vec& est, const Vec& truth) {
    const double d = truth.squaredNorm();
    require(d > 0, "slope_through_origin: zero regressor");
    return est.dot(truth) / d;
}

}  // namespace amp
