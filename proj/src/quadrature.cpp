#include "amp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

namespace amp {

namespace {

Rule golub_welsch(int n, const std::function<double(int)>& offdiag, double mu0) {
    Mat J = Mat::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k - 1, k) = J(k, k - 1) = offdiag(k);
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    Rule r;
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        r.nodes.push_back(es.eigenvalues()[i]);
        r.weights.push_back(mu0 * v0 * v0);
    }
    return r;
}

// Rules are cached per order; construction is the only costly step.
const Rule& cached(bool hermite, int n) {
    static std::mutex mu;
    static std::map<std::pair<bool, int>, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(hermite, n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    Rule r = hermite ? golub_welsch(n, [](int k) { return std::sqrt(double(k)); }, 1.0)
                     : golub_welsch(n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); }, 2.0);
    if (hermite) {
        // Symmetrise and renormalise so odd moments vanish and weights sum to one exactly.
        for (int i = 0; i < n / 2; ++i) {
            const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
            const double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
            r.nodes[i] = -x, r.nodes[n - 1 - i] = x;
            r.weights[i] = r.weights[n - 1 - i] = w;
        }
        if (n % 2) r.nodes[n / 2] = 0.0;
        double s = 0.0;
        for (double w : r.weights) s += w;
        for (double& w : r.weights) w /= s;
    }
    return cache.emplace(key, std::move(r)).first->second;
}

[[noreturn]] void nonfinite(double at) {
    std::ostringstream os;
    os << "non-finite integrand at node " << at;
    fail(ErrorKind::NonFinite, os.str());
}

inline double checked(double v, double at) {
    if (!std::isfinite(v)) nonfinite(at);
    return v;
}

}  // namespace

Rule gauss_hermite_rule(int n) { return cached(true, n); }
Rule gauss_legendre_rule(int n) { return cached(false, n); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_quantile(double p) {
    require(p > 0 && p < 1, "normal_quantile: p must lie in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

GaussQuad::GaussQuad(int order) : order_(order) {
    require(order >= 2, "GaussQuad: order must be at least 2");
    const Rule& h = cached(true, order);
    nodes_ = h.nodes, weights_ = h.weights;
    const Rule& l = cached(false, order);
    leg_nodes_ = l.nodes, leg_weights_ = l.weights;
}

double GaussQuad::expect(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (int i = 0; i < order_; ++i) s += weights_[i] * checked(f(nodes_[i]), nodes_[i]);
    return s;
}

double GaussQuad::expect_kinked(const std::function<double(double)>& f, std::vector<double> breaks) const {
    std::vector<double> pts{-kTail, kTail};
    for (double b : breaks)
        if (b > -kTail && b < kTail) pts.push_back(b);
    // Fixed interior cuts keep panel widths moderate.
    for (double c : {-7.0, -3.5, 0.0, 3.5, 7.0}) pts.push_back(c);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(), [](double a, double b) { return b - a < 1e-14; }), pts.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a = pts[k], b = pts[k + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int i = 0; i < order_; ++i) {
            const double x = mid + half * leg_nodes_[i];
            s += half * leg_weights_[i] * checked(f(x), x) * normal_pdf(x);
        }
    }
    return s;
}

double GaussQuad::expect2(const std::function<double(double, double)>& f) const {
    double s = 0.0;
    for (int i = 0; i < order_; ++i)
        for (int j = 0; j < order_; ++j)
            s += weights_[i] * weights_[j] * checked(f(nodes_[i], nodes_[j]), nodes_[i]);
    return s;
}

double GaussQuad::expect_cov(const std::function<double(double, double)>& f, double s11, double s12,
                             double s22) const {
    require(s11 >= 0 && s22 >= 0, "expect_cov: variances must be non-negative");
    const double a = std::sqrt(s11);
    if (a == 0.0) return expect([&](double u) { return f(0.0, std::sqrt(s22) * u); });
    const double c = s12 / a;
    const double d2 = s22 - c * c;
    const double d = d2 > 0 ? std::sqrt(d2) : 0.0;
    if (d == 0.0) return expect([&](double u) { return f(a * u, c * u); });
    return expect2([&](double u1, double u2) { return f(a * u1, c * u1 + d * u2); });
}

double GaussQuad::expect_prior(const Prior& prior, const std::function<double(double, double)>& f) const {
    double s = 0.0;
    if (prior.kind() == Prior::Kind::Discrete) {
        for (const auto& a : prior.atoms()) s += a.weight * expect([&](double g) { return f(a.loc, g); });
        return s;
    }
    for (const auto& c : prior.components()) {
        if (c.sd == 0.0)
            s += c.weight * expect([&](double g) { return f(c.mean, g); });
        else
            s += c.weight * expect2([&](double z, double g) { return f(c.mean + c.sd * z, g); });
    }
    return s;
}

double GaussQuad::expect_joint(const Prior& prior, double mu, double s, const std::function<double(double, double)>& f,
                               const std::vector<double>& x_breaks) const {
    require(s >= 0, "expect_joint: scale must be non-negative");
    double total = 0.0;
    for (const auto& c : prior.convolved(0.0)) {
        const double m = c.mean, sd = c.sd;
        const double scale = std::sqrt(mu * mu * sd * sd + s * s);
        if (scale == 0.0) {
            total += c.weight * checked(f(m, mu * m), m);
            continue;
        }
        std::vector<double> ub;
        for (double b : x_breaks) ub.push_back((b - mu * m) / scale);
        double part;
        if (sd == 0.0) {
            part = expect_kinked([&](double u) { return f(m, mu * m + scale * u); }, ub);
        } else {
            const double r = mu * sd / scale;
            const double q = std::sqrt(std::max(0.0, 1.0 - r * r));
            part = expect_kinked(
                [&](double u) {
                    const double x = mu * m + scale * u;
                    if (q == 0.0) return f(m + sd * r * u, x);
                    return expect([&](double z) { return f(m + sd * (r * u + q * z), x); });
                },
                ub);
        }
        total += c.weight * part;
    }
    return total;
}

double GaussQuad::expect_marginal(const Prior& prior, double mu, double s, const std::function<double(double)>& f,
                                  const std::vector<double>& x_breaks) const {
    require(s >= 0, "expect_marginal: scale must be non-negative");
    double total = 0.0;
    for (const auto& c : prior.convolved(0.0)) {
        const double m = mu * c.mean, sd = std::sqrt(mu * mu * c.sd * c.sd + s * s);
        if (sd == 0.0) {
            total += c.weight * checked(f(m), m);
            continue;
        }
        std::vector<double> ub;
        for (double b : x_breaks) ub.push_back((b - m) / sd);
        total += c.weight * expect_kinked([&](double u) { return f(m + sd * u); }, ub);
    }
    return total;
}

}  // namespace amp
