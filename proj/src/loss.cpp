#include "amp/loss.hpp"

#include <algorithm>
#include <cmath>

#include "amp/types.hpp"

namespace amp {

Loss Loss::huber(double B) {
    require(B > 0, "Huber loss: B must be positive");
    return {Kind::Huber, B};
}
Loss Loss::pseudo_huber(double B) {
    require(B > 0, "PseudoHuber loss: B must be positive");
    return {Kind::PseudoHuber, B};
}
Loss Loss::quantile(double tau) {
    require(tau > 0 && tau < 1, "Quantile loss: tau must lie in (0,1)");
    return {Kind::Quantile, tau};
}

Loss Loss::from_json(const nlohmann::json& j) {
    const std::string k = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
    const double param = j.is_object() ? j.value("param", 1.0) : 1.0;
    if (k == "square") return square();
    if (k == "absolute") return absolute();
    if (k == "huber") return huber(param);
    if (k == "pseudo_huber") return pseudo_huber(param);
    if (k == "quantile") return quantile(j.is_object() ? j.value("param", 0.5) : 0.5);
    if (k == "logistic") return logistic();
    fail(ErrorKind::Config, "unknown loss '" + k + "'");
}

std::string Loss::name() const {
    switch (kind) {
        case Kind::Square: return "square";
        case Kind::Absolute: return "absolute";
        case Kind::Huber: return "huber";
        case Kind::LogisticZeta: return "logistic";
        case Kind::Quantile: return "quantile";
        case Kind::PseudoHuber: return "pseudo_huber";
    }
    return "?";
}

double zeta(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double zeta1(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}
double zeta2(double z) {
    const double s = zeta1(z);
    return s * (1.0 - s);
}

double Loss::value(double w) const {
    switch (kind) {
        case Kind::Square: return 0.5 * w * w;
        case Kind::Absolute: return std::abs(w);
        case Kind::Huber: return std::abs(w) <= param ? 0.5 * w * w : param * std::abs(w) - 0.5 * param * param;
        case Kind::LogisticZeta: return zeta(w);
        case Kind::Quantile: return w * (param - (w < 0 ? 1.0 : 0.0));
        case Kind::PseudoHuber: return param * param * (std::sqrt(1.0 + (w / param) * (w / param)) - 1.0);
    }
    return 0.0;
}

double Loss::deriv(double w) const {
    switch (kind) {
        case Kind::Square: return w;
        case Kind::Absolute: return w >= 0 ? 1.0 : -1.0;
        case Kind::Huber: return std::clamp(w, -param, param);
        case Kind::LogisticZeta: return zeta1(w);
        case Kind::Quantile: return w >= 0 ? param : param - 1.0;
        case Kind::PseudoHuber: return w / std::sqrt(1.0 + (w / param) * (w / param));
    }
    return 0.0;
}

std::vector<double> Loss::kinks() const {
    switch (kind) {
        case Kind::Absolute:
        case Kind::Quantile: return {0.0};
        case Kind::Huber: return {-param, param};
        default: return {};
    }
}

std::vector<double> prox_breaks(const Loss& loss, double eta) {
    switch (loss.kind) {
        case Loss::Kind::Absolute: return {-eta, eta};
        case Loss::Kind::Huber: return {-loss.param * (1 + eta), loss.param * (1 + eta)};
        case Loss::Kind::Quantile: return {-eta * (1 - loss.param), eta * loss.param};
        default: return {};
    }
}

namespace {

// Root of t + eta*h(t) = z for increasing h with values in (lo_h, hi_h), by Newton safeguarded by bisection.
template <class H, class DH>
double monotone_root(double z, double eta, double lo_h, double hi_h, H h, DH dh) {
    double lo = z - eta * hi_h, hi = z - eta * lo_h;
    double t = std::clamp(z - eta * h(z), lo, hi);
    const double tol = 1e-12 * std::max(1.0, std::abs(z));
    for (int it = 0; it < 100; ++it) {
        const double r = t + eta * h(t) - z;
        if (std::abs(r) < tol) return t;
        // With large eta the residual is limited by rounding of eta*h(t); stop once t is pinned down.
        if (hi - lo <= 4e-16 * std::max(1.0, std::abs(t))) return t;
        if (r > 0)
            hi = t;
        else
            lo = t;
        double tn = t - r / (1.0 + eta * dh(t));
        // Bisect when Newton leaves the bracket or would not halve it (flat tails make it oscillate).
        if (!(tn > lo && tn < hi) || std::abs(tn - t) > 0.5 * (hi - lo)) tn = 0.5 * (lo + hi);
        t = tn;
    }
    if (std::abs(t + eta * h(t) - z) < 1e3 * tol || hi - lo <= 1e-12 * std::max(1.0, std::abs(t))) return t;
    fail(ErrorKind::Solver, "prox: Newton iteration did not converge (eta=" + std::to_string(eta) + ", z=" + std::to_string(z) + ")");
}

}  // namespace

double prox_zeta(double eta, double z) {
    require(eta > 0, "prox: eta must be positive");
    return monotone_root(z, eta, 0.0, 1.0, zeta1, zeta2);
}

double prox(const Loss& loss, double eta, double z, std::optional<double> v) {
    require(eta > 0, "prox: eta must be positive");
    const bool two_arg = loss.kind == Loss::Kind::Square || loss.kind == Loss::Kind::LogisticZeta;
    require(!v || two_arg, "prox: second argument only for square/logistic losses");
    const double B = loss.param;
    switch (loss.kind) {
        case Loss::Kind::Square: return (z + eta * v.value_or(0.0)) / (1.0 + eta);
        case Loss::Kind::Absolute: return std::abs(z) > eta ? z - std::copysign(eta, z) : 0.0;
        case Loss::Kind::Huber: return std::abs(z) <= B * (1 + eta) ? z / (1 + eta) : z - std::copysign(eta * B, z);
        case Loss::Kind::Quantile:
            if (z > eta * B) return z - eta * B;
            if (z < -eta * (1 - B)) return z + eta * (1 - B);
            return 0.0;
        case Loss::Kind::LogisticZeta: return prox_zeta(eta, z + eta * v.value_or(0.0));
        case Loss::Kind::PseudoHuber:
            return monotone_root(
                z, eta, -B, B, [B](double t) { return t / std::sqrt(1.0 + (t / B) * (t / B)); },
                [B](double t) { return std::pow(1.0 + (t / B) * (t / B), -1.5); });
    }
    return 0.0;
}

double prox_deriv(const Loss& loss, double eta, double z, std::optional<double> v) {
    const double B = loss.param;
    switch (loss.kind) {
        case Loss::Kind::Square: return 1.0 / (1.0 + eta);
        case Loss::Kind::Absolute: return std::abs(z) > eta ? 1.0 : 0.0;
        case Loss::Kind::Huber: return std::abs(z) <= B * (1 + eta) ? 1.0 / (1 + eta) : 1.0;
        case Loss::Kind::Quantile: return (z > eta * B || z < -eta * (1 - B)) ? 1.0 : 0.0;
        case Loss::Kind::LogisticZeta: return 1.0 / (1.0 + eta * zeta2(prox(loss, eta, z, v)));
        case Loss::Kind::PseudoHuber: {
            const double t = prox(loss, eta, z);
            return 1.0 / (1.0 + eta * std::pow(1.0 + (t / B) * (t / B), -1.5));
        }
    }
    return 0.0;
}

std::pair<double, double> moreau_score(const Loss& loss, double eta, double z) {
    return {z - prox(loss, eta, z), 1.0 - prox_deriv(loss, eta, z)};
}

}  // namespace amp
