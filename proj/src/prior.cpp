#include "amp/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "amp/quadrature.hpp"

namespace amp {

namespace {
constexpr double kWeightTol = 1e-12;

double logsumexp_normalise(std::vector<double>& lw) {
    const double mx = *std::max_element(lw.begin(), lw.end());
    double s = 0.0;
    for (double& x : lw) {
        x = std::exp(x - mx);
        s += x;
    }
    for (double& x : lw) x /= s;
    return mx + std::log(s);
}
}  // namespace

Prior Prior::discrete(std::vector<Atom> atoms) {
    require(!atoms.empty(), "Prior: at least one atom required");
    double total = 0.0;
    for (const auto& a : atoms) {
        require(a.weight > 0 && std::isfinite(a.loc), "Prior: atom weights must be positive and locations finite");
        total += a.weight;
    }
    require(std::abs(total - 1.0) <= kWeightTol, "Prior: weights must sum to 1");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.loc < b.loc; });
    for (std::size_t i = 1; i < atoms.size(); ++i)
        require(atoms[i].loc != atoms[i - 1].loc, "Prior: atoms must be distinct");
    Prior p;
    p.kind_ = Kind::Discrete;
    p.atoms_ = std::move(atoms);
    p.finish();
    return p;
}

Prior Prior::mixture(std::vector<Component> comps) {
    require(!comps.empty(), "Prior: at least one component required");
    double total = 0.0;
    for (const auto& c : comps) {
        require(c.weight > 0 && c.sd >= 0 && std::isfinite(c.mean), "Prior: invalid mixture component");
        total += c.weight;
    }
    require(std::abs(total - 1.0) <= kWeightTol, "Prior: weights must sum to 1");
    Prior p;
    p.kind_ = Kind::GaussMixture;
    p.comps_ = std::move(comps);
    p.finish();
    return p;
}

void Prior::finish() {
    m1_ = m2_ = 0.0;
    if (kind_ == Kind::Discrete) {
        for (const auto& a : atoms_) {
            m1_ += a.weight * a.loc;
            m2_ += a.weight * a.loc * a.loc;
        }
    } else {
        for (const auto& c : comps_) {
            m1_ += c.weight * c.mean;
            m2_ += c.weight * (c.mean * c.mean + c.sd * c.sd);
        }
    }
}

Prior Prior::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "discrete") {
        std::vector<Atom> atoms;
        for (const auto& a : j.at("atoms")) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
        return discrete(atoms);
    }
    if (kind == "mixture") {
        std::vector<Component> comps;
        for (const auto& c : j.at("components"))
            comps.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()});
        return mixture(comps);
    }
    if (kind == "rademacher") return rademacher();
    if (kind == "gaussian") return gaussian(j.value("mean", 0.0), j.value("sd", 1.0));
    if (kind == "point") return point(j.value("loc", 0.0));
    if (kind == "sparse") {
        // zero_mass at 0, the rest split evenly on +-value.
        const double z = j.at("zero_mass").get<double>(), x = j.at("value").get<double>();
        if (z == 0.0) return discrete({{-x, 0.5}, {x, 0.5}});
        return discrete({{-x, (1 - z) / 2}, {0.0, z}, {x, (1 - z) / 2}});
    }
    fail(ErrorKind::Config, "unknown prior kind '" + kind + "'");
}

nlohmann::json Prior::to_json() const {
    nlohmann::json j;
    if (kind_ == Kind::Discrete) {
        j["kind"] = "discrete";
        j["atoms"] = nlohmann::json::array();
        for (const auto& a : atoms_) j["atoms"].push_back({a.loc, a.weight});
    } else {
        j["kind"] = "mixture";
        j["components"] = nlohmann::json::array();
        for (const auto& c : comps_) j["components"].push_back({c.mean, c.sd, c.weight});
    }
    return j;
}

std::vector<Component> Prior::convolved(double s) const {
    std::vector<Component> out;
    if (kind_ == Kind::Discrete)
        for (const auto& a : atoms_) out.push_back({a.loc, s, a.weight});
    else
        for (const auto& c : comps_) out.push_back({c.mean, std::hypot(c.sd, s), c.weight});
    return out;
}

double Prior::sample(RngStream& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    if (kind_ == Kind::Discrete) {
        for (const auto& a : atoms_) {
            acc += a.weight;
            if (u < acc) return a.loc;
        }
        return atoms_.back().loc;
    }
    const Component* pick = &comps_.back();
    for (const auto& c : comps_) {
        acc += c.weight;
        if (u < acc) {
            pick = &c;
            break;
        }
    }
    return pick->mean + pick->sd * rng.normal();
}

Vec Prior::sample_vec(Eigen::Index n, RngStream& rng) const {
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = sample(rng);
    return x;
}

void Prior::post_weights(double mu, double sigma, double y, std::vector<double>& w) const {
    w.clear();
    if (kind_ == Kind::Discrete) {
        const double s2 = sigma * sigma;
        for (const auto& a : atoms_) {
            const double r = y - mu * a.loc;
            w.push_back(std::log(a.weight) - r * r / (2 * s2));
        }
    } else {
        for (const auto& c : comps_) {
            const double var = mu * mu * c.sd * c.sd + sigma * sigma;
            const double r = y - mu * c.mean;
            w.push_back(std::log(c.weight) - 0.5 * std::log(var) - r * r / (2 * var));
        }
    }
    logsumexp_normalise(w);
}

namespace {
void check_obs(double mu, double sigma) {
    require(sigma >= 0, "posterior_mean: sigma must be non-negative");
    require(!(mu == 0.0 && sigma == 0.0), "posterior_mean: mu = sigma = 0 carries no information");
}
}  // namespace

double Prior::posterior_mean(double mu, double sigma, double y) const {
    check_obs(mu, sigma);
    if (mu == 0.0) return m1_;
    if (sigma == 0.0) {
        const double x = y / mu;
        if (kind_ == Kind::Discrete) return std::clamp(x, atoms_.front().loc, atoms_.back().loc);
        return x;
    }
    thread_local std::vector<double> w;
    post_weights(mu, sigma, y, w);
    double m = 0.0;
    if (kind_ == Kind::Discrete) {
        for (std::size_t i = 0; i < atoms_.size(); ++i) m += w[i] * atoms_[i].loc;
    } else {
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            const auto& c = comps_[i];
            const double var = mu * mu * c.sd * c.sd + sigma * sigma;
            m += w[i] * (c.mean + mu * c.sd * c.sd * (y - mu * c.mean) / var);
        }
    }
    return m;
}

double Prior::posterior_var(double mu, double sigma, double y) const {
    check_obs(mu, sigma);
    if (mu == 0.0) return var();
    if (sigma == 0.0) return 0.0;
    thread_local std::vector<double> w;
    post_weights(mu, sigma, y, w);
    double m = 0.0, s = 0.0;
    if (kind_ == Kind::Discrete) {
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            m += w[i] * atoms_[i].loc;
            s += w[i] * atoms_[i].loc * atoms_[i].loc;
        }
    } else {
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            const auto& c = comps_[i];
            const double var = mu * mu * c.sd * c.sd + sigma * sigma;
            const double cm = c.mean + mu * c.sd * c.sd * (y - mu * c.mean) / var;
            const double cv = c.sd * c.sd * sigma * sigma / var;
            m += w[i] * cm;
            s += w[i] * (cv + cm * cm);
        }
    }
    return std::max(0.0, s - m * m);
}

double Prior::posterior_mean_deriv(double mu, double sigma, double y) const {
    check_obs(mu, sigma);
    if (mu == 0.0) return 0.0;
    if (sigma == 0.0) {
        if (kind_ == Kind::Discrete) {
            const double x = y / mu;
            return (x > atoms_.front().loc && x < atoms_.back().loc) ? 1.0 / mu : 0.0;
        }
        return 1.0 / mu;
    }
    return mu / (sigma * sigma) * posterior_var(mu, sigma, y);
}

double Prior::posterior_quantile(double mu, double sigma, double y, double q) const {
    require(kind_ == Kind::Discrete, "posterior_quantile: Discrete priors only");
    require(q > 0 && q < 1, "posterior_quantile: q must lie in (0,1)");
    check_obs(mu, sigma);
    if (sigma == 0.0 && mu != 0.0) return posterior_mean(mu, sigma, y);
    std::vector<double> w;
    if (mu == 0.0) {
        for (const auto& a : atoms_) w.push_back(a.weight);
    } else {
        post_weights(mu, sigma, y, w);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        acc += w[i];
        if (acc >= q) return atoms_[i].loc;
    }
    return atoms_.back().loc;
}

double Prior::marginal_density(double mu, double sigma, double y) const {
    require(sigma > 0, "marginal_density: sigma must be positive");
    double d = 0.0;
    for (const auto& c : convolved(0.0)) {
        const double sd = std::hypot(mu * c.sd, sigma);
        d += c.weight * normal_pdf((y - mu * c.mean) / sd) / sd;
    }
    return d;
}

double Prior::mmse(double rho, int quad_order) const {
    require(!(rho < 0), "mmse: rho must be non-negative");
    if (std::isinf(rho)) return 0.0;
    if (rho == 0.0) return var();
    const GaussQuad q(quad_order);
    const double r = std::sqrt(rho);
    double out = 0.0;
    if (kind_ == Kind::Discrete) {
        for (const auto& a : atoms_)
            out += a.weight * q.expect_kinked([&](double g) {
                const double e = a.loc - posterior_mean(r, 1.0, r * a.loc + g);
                return e * e;
            }, {});
        return std::clamp(out, 0.0, var());
    }
    double e2 = 0.0;
    for (const auto& c : comps_) {
        const double sd = std::sqrt(rho * c.sd * c.sd + 1.0);
        e2 += c.weight * q.expect_kinked([&](double u) {
            const double m = posterior_mean(r, 1.0, r * c.mean + sd * u);
            return m * m;
        }, {});
    }
    return std::clamp(m2_ - e2, 0.0, var());
}

void Prior::require_unit_second_moment(double tol) const {
    if (std::abs(m2_ - 1.0) > tol) fail(ErrorKind::Precondition, "prior must satisfy E V^2 = 1");
}

}  // namespace amp
