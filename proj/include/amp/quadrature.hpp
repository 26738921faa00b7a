#pragma once

#include <functional>
#include <vector>

#include "amp/prior.hpp"
#include "amp/types.hpp"

namespace amp {

// Gaussian expectation rule. Smooth integrands use Gauss-Hermite nodes (weights sum to 1 for N(0,1));
// integrands in the prior-joint form use composite Gauss-Legendre split at any kinks.
class GaussQuad {
public:
    explicit GaussQuad(int order = 61);

    int order() const { return order_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    // E f(G), G ~ N(0,1).
    double expect(const std::function<double(double)>& f) const;
    // Same by composite Gauss-Legendre panels on [-kTail, kTail], split at the listed G-values.
    double expect_kinked(const std::function<double(double)>& f, std::vector<double> breaks) const;
    // E f(G1, G2) for independent standard normals (tensor rule).
    double expect2(const std::function<double(double, double)>& f) const;
    // E f(X1, X2) for (X1, X2) ~ N(0, cov), via a Cholesky factor.
    double expect_cov(const std::function<double(double, double)>& f, double s11, double s12, double s22) const;

    // E f(V, G) with V ~ prior (exact atom sums, per-component rule for mixtures).
    double expect_prior(const Prior& prior, const std::function<double(double, double)>& f) const;
    // E f(V, X) with X = mu V + s G, V ~ prior; f may have kinks in x at x_breaks. Always uses panels,
    // since saturating scores converge slowly under Gauss-Hermite.
    double expect_joint(const Prior& prior, double mu, double s, const std::function<double(double, double)>& f,
                        const std::vector<double>& x_breaks = {}) const;

    // E f(X) with X = mu V + s G, integrating the Gaussian-mixture marginal of X directly.
    double expect_marginal(const Prior& prior, double mu, double s, const std::function<double(double)>& f,
                           const std::vector<double>& x_breaks = {}) const;

    // Truncation for composite Legendre panels.
    static constexpr double kTail = 14.0;

private:
    int order_;
    std::vector<double> nodes_, weights_;
    std::vector<double> leg_nodes_, leg_weights_;  // on [-1,1]
};

struct Rule {
    std::vector<double> nodes, weights;
};
Rule gauss_hermite_rule(int n);   // probabilists' weight, normalised to sum 1
Rule gauss_legendre_rule(int n);  // on [-1, 1]

double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace amp
