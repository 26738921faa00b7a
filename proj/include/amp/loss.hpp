#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace amp {

// Convex scalar losses. Square and LogisticZeta also act as two-argument losses
// l(u,v) = (u-v)^2/2 and zeta(u) - v u.
struct Loss {
    enum class Kind { Square, Absolute, Huber, LogisticZeta, Quantile, PseudoHuber };
    Kind kind = Kind::Square;
    double param = 1.0;  // B for Huber/PseudoHuber, tau for Quantile

    static Loss square() { return {Kind::Square, 1.0}; }
    static Loss absolute() { return {Kind::Absolute, 1.0}; }
    static Loss huber(double B);
    static Loss pseudo_huber(double B);
    static Loss quantile(double tau);
    static Loss logistic() { return {Kind::LogisticZeta, 1.0}; }
    static Loss from_json(const nlohmann::json& j);
    std::string name() const;

    double value(double w) const;
    double deriv(double w) const;  // right derivative at kinks
    // Points where the score is not differentiable.
    std::vector<double> kinks() const;
    bool smooth() const { return kinks().empty(); }
};

double zeta(double z);     // log(1 + e^z)
double zeta1(double z);    // logistic sigmoid
double zeta2(double z);    // sigmoid * (1 - sigmoid)

// Unique minimiser of eta*M(t) + (t-z)^2/2, or of eta*l(t,v) + (t-z)^2/2 when v is given.
double prox(const Loss& loss, double eta, double z, std::optional<double> v = std::nullopt);
// d prox / dz (weak derivative at kinks, right-continuous convention).
double prox_deriv(const Loss& loss, double eta, double z, std::optional<double> v = std::nullopt);

// z-values where prox_{eta M} is not differentiable.
std::vector<double> prox_breaks(const Loss& loss, double eta);

// S_eta(z) = z - prox_{eta M}(z) and its derivative.
std::pair<double, double> moreau_score(const Loss& loss, double eta, double z);

// prox of eta*zeta: root of t + eta*zeta'(t) = z.
double prox_zeta(double eta, double z);

}  // namespace amp
