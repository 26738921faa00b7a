#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "amp/rng.hpp"
#include "amp/types.hpp"

namespace amp {

struct Atom {
    double loc, weight;
};
struct Component {
    double mean, sd, weight;
};

// Scalar law: finite-support or Gaussian mixture. Also used for noise distributions.
class Prior {
public:
    enum class Kind { Discrete, GaussMixture };

    static Prior discrete(std::vector<Atom> atoms);
    static Prior mixture(std::vector<Component> comps);
    static Prior gaussian(double mean, double sd) { return mixture({{mean, sd, 1.0}}); }
    static Prior rademacher() { return discrete({{-1.0, 0.5}, {1.0, 0.5}}); }
    static Prior point(double x) { return discrete({{x, 1.0}}); }
    static Prior from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    Kind kind() const { return kind_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<Component>& components() const { return comps_; }
    double m1() const { return m1_; }
    double m2() const { return m2_; }
    double var() const { return m2_ - m1_ * m1_; }

    // Law of V + s G as a mixture of Gaussians (atoms become components of sd s).
    std::vector<Component> convolved(double s) const;

    double sample(RngStream& rng) const;
    Vec sample_vec(Eigen::Index n, RngStream& rng) const;

    // E(V | mu V + sigma G = y) and its derivative in y (= mu Var(V|y) / sigma^2).
    double posterior_mean(double mu, double sigma, double y) const;
    double posterior_mean_deriv(double mu, double sigma, double y) const;
    double posterior_var(double mu, double sigma, double y) const;
    // Posterior quantile for Discrete priors (median at q = 0.5).
    double posterior_quantile(double mu, double sigma, double y, double q) const;

    // Density of mu V + sigma G at y (sigma > 0).
    double marginal_density(double mu, double sigma, double y) const;

    // E(V - E(V | sqrt(rho) V + G))^2; rho = +inf gives 0.
    double mmse(double rho, int quad_order = 61) const;

    void require_unit_second_moment(double tol = 1e-8) const;

private:
    void finish();
    // Posterior weights over atoms/components, computed by log-sum-exp.
    void post_weights(double mu, double sigma, double y, std::vector<double>& w) const;

    Kind kind_ = Kind::Discrete;
    std::vector<Atom> atoms_;
    std::vector<Component> comps_;
    double m1_ = 0.0, m2_ = 0.0;
};

}  // namespace amp
