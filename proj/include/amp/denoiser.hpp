#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "amp/loss.hpp"
#include "amp/prior.hpp"
#include "amp/types.hpp"

namespace amp {

struct SoftThresholdOut {
    double value, deriv;
};
// sgn(x)(|x|-t)_+ with weak derivative 1{|x| > t} (0 at |x| = t).
SoftThresholdOut soft_threshold(double t, double x);

enum class DenoiserTag { SoftThreshold, PosteriorMean, ProxScore, Linear, Prox, Custom };

// Componentwise Lipschitz map with a declared weak derivative.
struct ScalarDenoiser {
    std::function<double(double)> eval;
    std::function<double(double)> deriv;
    double lipschitz_bound = 1.0;
    DenoiserTag tag = DenoiserTag::Custom;
    std::vector<double> kinks;
    std::string label;

    double operator()(double x) const { return eval(x); }
    Vec apply(const Vec& x) const;
    double mean_deriv(const Vec& x) const;
};

ScalarDenoiser soft_threshold_denoiser(double t);
ScalarDenoiser posterior_mean_denoiser(const Prior& prior, double mu, double sigma);
ScalarDenoiser linear_denoiser(double slope);
ScalarDenoiser prox_denoiser(const Loss& loss, double eta);
ScalarDenoiser prox_score_denoiser(const Loss& loss, double eta);
ScalarDenoiser custom_denoiser(std::function<double(double)> f, std::function<double(double)> df,
                               double lipschitz, std::string label = "custom");

// Lipschitz constant estimated by max |f'| on a grid plus max secant slope.
double estimate_lipschitz(const std::function<double(double)>& f, double lo, double hi, int points = 4001);

// Denoiser with side information: f(x, gamma) and d/dx f(x, gamma).
struct SideDenoiser {
    std::function<double(double, double)> eval;
    std::function<double(double, double)> deriv;
    std::string label = "custom";

    Vec apply(const Vec& x, const Vec& side) const;
    double mean_deriv(const Vec& x, const Vec& side) const;
};

}  // namespace amp
