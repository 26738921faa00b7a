#include "amp/denoiser.hpp"

#include <algorithm>
#include <cmath>

namespace amp {

SoftThresholdOut soft_threshold(double t, double x) {
    require(t > 0, "soft_threshold: t must be positive");
    if (std::abs(x) > t) return {x - std::copysign(t, x), 1.0};
    return {0.0, 0.0};
}

Vec ScalarDenoiser::apply(const Vec& x) const {
    Vec y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = eval(x[i]);
    return y;
}

double ScalarDenoiser::mean_deriv(const Vec& x) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += deriv(x[i]);
    return x.size() ? s / double(x.size()) : 0.0;
}

Vec SideDenoiser::apply(const Vec& x, const Vec& side) const {
    Vec y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = eval(x[i], side.size() ? side[i] : 0.0);
    return y;
}

double SideDenoiser::mean_deriv(const Vec& x, const Vec& side) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += deriv(x[i], side.size() ? side[i] : 0.0);
    return x.size() ? s / double(x.size()) : 0.0;
}

double estimate_lipschitz(const std::function<double(double)>& f, double lo, double hi, int points) {
    double L = 0.0;
    const double h = (hi - lo) / (points - 1);
    double prev = f(lo);
    for (int i = 1; i < points; ++i) {
        const double cur = f(lo + i * h);
        L = std::max(L, std::abs(cur - prev) / h);
        prev = cur;
    }
    return L;
}

ScalarDenoiser soft_threshold_denoiser(double t) {
    require(t > 0, "soft_threshold: t must be positive");
    ScalarDenoiser d;
    d.eval = [t](double x) { return soft_threshold(t, x).value; };
    d.deriv = [t](double x) { return soft_threshold(t, x).deriv; };
    d.lipschitz_bound = 1.0;
    d.tag = DenoiserTag::SoftThreshold;
    d.kinks = {-t, t};
    d.label = "soft_threshold";
    return d;
}

ScalarDenoiser posterior_mean_denoiser(const Prior& prior, double mu, double sigma) {
    ScalarDenoiser d;
    if (mu == 0.0) {
        // No signal in the observation: the Bayes rule is the prior mean.
        const double m = prior.m1();
        d.eval = [m](double) { return m; };
        d.deriv = [](double) { return 0.0; };
        d.lipschitz_bound = 0.0;
    } else {
        d.eval = [prior, mu, sigma](double y) { return prior.posterior_mean(mu, sigma, y); };
        d.deriv = [prior, mu, sigma](double y) { return prior.posterior_mean_deriv(mu, sigma, y); };
        const double span = 10.0 * (std::abs(mu) * std::sqrt(prior.m2()) + sigma + 1.0);
        d.lipschitz_bound = sigma > 0 ? estimate_lipschitz(d.eval, -span, span) : 1.0 / std::abs(mu);
    }
    d.tag = DenoiserTag::PosteriorMean;
    d.label = "posterior_mean";
    return d;
}

ScalarDenoiser linear_denoiser(double slope) {
    ScalarDenoiser d;
    d.eval = [slope](double x) { return slope * x; };
    d.deriv = [slope](double) { return slope; };
    d.lipschitz_bound = std::abs(slope);
    d.tag = DenoiserTag::Linear;
    d.label = "linear";
    return d;
}

ScalarDenoiser prox_denoiser(const Loss& loss, double eta) {
    ScalarDenoiser d;
    d.eval = [loss, eta](double z) { return prox(loss, eta, z); };
    d.deriv = [loss, eta](double z) { return prox_deriv(loss, eta, z); };
    d.lipschitz_bound = 1.0;
    d.tag = DenoiserTag::Prox;
    d.kinks = prox_breaks(loss, eta);
    d.label = "prox_" + loss.name();
    return d;
}

ScalarDenoiser prox_score_denoiser(const Loss& loss, double eta) {
    ScalarDenoiser d;
    d.eval = [loss, eta](double z) { return moreau_score(loss, eta, z).first; };
    d.deriv = [loss, eta](double z) { return moreau_score(loss, eta, z).second; };
    d.lipschitz_bound = 1.0;
    d.tag = DenoiserTag::ProxScore;
    d.kinks = prox_breaks(loss, eta);
    d.label = "score_" + loss.name();
    return d;
}

ScalarDenoiser custom_denoiser(std::function<double(double)> f, std::function<double(double)> df, double lipschitz,
                               std::string label) {
    ScalarDenoiser d;
    d.eval = std::move(f);
    d.deriv = std::move(df);
    d.lipschitz_bound = lipschitz;
    d.tag = DenoiserTag::Custom;
    d.label = std::move(label);
    return d;
}

}  // namespace amp
