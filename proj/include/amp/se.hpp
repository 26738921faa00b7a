#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amp/denoiser.hpp"
#include "amp/loss.hpp"
#include "amp/prior.hpp"
#include "amp/quadrature.hpp"

namespace amp {

constexpr int kLedgerMax = 64;

enum class SEFlavor { SymmetricAbstract, Asymmetric, Spiked, Gamp, Linear, Lasso, Mest, Logistic, Rect };
std::string flavor_name(SEFlavor f);

// Per-iteration state evolution parameters. Indexing follows the recursion: entry k belongs to iterate k.
struct SEPath {
    SEFlavor flavor = SEFlavor::SymmetricAbstract;
    std::vector<double> mu, sigma, tau, rho;
    std::vector<double> onsager_b, onsager_c;  // deterministic limits of b_k and c_k
    std::vector<double> threshold;             // Lasso t_k
    Mat ledger;                                // limiting covariance of the iterates
    std::vector<Mat> Sigma;                    // GAMP 2x2 covariances of (Z, Z_k)
    std::vector<double> muZ, sigmaZ;
    std::vector<std::string> flags;

    nlohmann::json to_json() const;
};

// ---- abstract symmetric recursion ----
// f[k] (k >= 1) acts on h^k with side information gamma; f[0] is unused (m^0 is given).
// F0(gamma) = E(m^0 | gamma); an empty function means F0 = 0. Produces tau[k] for k = 1..K,
// ledger(j-1, l-1) = Tbar_{j,l}, onsager_b[k] = E f_k'(G_k, gamma).
SEPath se_symmetric(const std::vector<SideDenoiser>& f, const Prior& gamma, double tau1, int K,
                    const std::function<double(double)>& F0 = {}, const GaussQuad& quad = GaussQuad());

// ---- abstract asymmetric recursion ----
// g[k] for k = 0..K-1 (side gamma), f[k] for k = 1..K (side beta); sigma0^2 = lim ||m^0||^2 / n.
// Produces sigma[k] (of e^k) for k = 0..K-1 and tau[k] (of h^k) for k = 1..K.
SEPath se_asymmetric(const std::vector<SideDenoiser>& g, const std::vector<SideDenoiser>& f, const Prior& gamma,
                     const Prior& beta, double delta, double sigma0, int K, const GaussQuad& quad = GaussQuad());

// ---- spiked model ----
struct SpikedPolicy {
    enum class Kind { Bayes, SoftThreshold, PowerLinear, Custom };
    Kind kind = Kind::Bayes;
    double st_factor = 2.0;  // t_k = st_factor * sigma_k
    std::function<ScalarDenoiser(int k, double mu, double sigma)> custom;

    static SpikedPolicy bayes() { return {}; }
    static SpikedPolicy soft_threshold(double factor = 2.0) { return {Kind::SoftThreshold, factor, {}}; }
    static SpikedPolicy power_linear() { return {Kind::PowerLinear, 2.0, {}}; }
    std::string name() const;
};

// g_k for effective observation mu V + sigma G.
ScalarDenoiser spiked_denoiser(const SpikedPolicy& policy, const Prior& prior, int k, double mu, double sigma);

// mu[k], sigma[k] for k = 0..K; rho[k] = (mu_k/sigma_k)^2; onsager_b[k] = E g_k'.
SEPath se_spiked(const Prior& prior, double lambda, double mu0, double sigma0, const SpikedPolicy& policy, int K,
                 const GaussQuad& quad = GaussQuad());
// Asymptotic MSE and correlation of vhat^k from an SE path (uses entry k+1).
double spiked_amse(const SEPath& se, double lambda, int k);
double spiked_corr(const SEPath& se, double lambda, int k);

// mu_{k+1} = lambda / sqrt(1 + mu_k^{-2}).
std::vector<double> power_linear_mu(double lambda, double mu0, int K);

struct RhoFixedPoint {
    double rho = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool degenerate = false;
    std::vector<double> path;
};
// Smallest positive fixed point of rho = lambda^2 (1 - mmse(rho)) reached from rho0.
RhoFixedPoint rho_star(const Prior& prior, double lambda, double rho0, const GaussQuad& quad = GaussQuad());
double bayes_map(const Prior& prior, double lambda, double rho, const GaussQuad& quad = GaussQuad());

// ---- rectangular spiked model A = (lambda/n) u v^T + W ----
// f acts on v-side iterates, g on u-side. mu/sigma hold v-side (index k), muZ/sigmaZ u-side.
SEPath se_rect(const Prior& u_prior, const Prior& v_prior, double lambda, double delta, double mu0, double sigma0,
               const std::function<ScalarDenoiser(int, double, double)>& f,
               const std::function<ScalarDenoiser(int, double, double)>& g, int K,
               const GaussQuad& quad = GaussQuad());

// ---- GAMP ----
struct Link {
    enum class Kind { Linear, Logistic, PhaseRetrieval, Custom };
    Kind kind = Kind::Linear;
    std::function<double(double, double)> custom;

    static Link linear() { return {}; }
    static Link logistic() { return {Kind::Logistic, {}}; }
    static Link phase_retrieval() { return {Kind::PhaseRetrieval, {}}; }
    static Link from_name(const std::string& name);
    std::string name() const;
    double operator()(double z, double eps) const;
};

struct GampG {
    std::function<double(double, double)> eval;  // g(u, y)
    std::function<double(double, double)> du;    // d/du g(u, y)
};
struct GampF {
    std::function<double(double)> eval, deriv;
    std::vector<double> kinks;
};

// Expectation over (Z, Z_k, Y) with Z ~ N(0, s11), Z_k = muZ Z + sigmaZ Gt, Y = h(Z, eps).
// For the logistic link eps ~ U[0,1] and the Y-sum is exact.
double gamp_expect(const Link& link, const Prior& noise, double s11, double muZ, double sigmaZ,
                   const std::function<double(double z, double zk, double y)>& fn, const GaussQuad& quad);

// g[k] for k = 0..K-1, f[k] for k = 1..K. Sigma0 is the 2x2 covariance of (Z, Z_0).
// Produces mu[k], sigma[k] for k = 1..K, Sigma[k] for k = 0..K, onsager_c[k] (= cbar_k), onsager_b[k] (k >= 1).
SEPath se_gamp(const Prior& prior, const Prior& noise, const Link& link, double delta, const std::vector<GampG>& g,
               const std::vector<GampF>& f, const Mat& Sigma0, int K, const GaussQuad& quad = GaussQuad());

// Linear-model SE: sigma_{k+1}^2 = sigma^2 + E(beta - f_k(beta + sigma_k G))^2 / delta, mu = 1.
SEPath se_linear(const Prior& prior, double noise_var, double delta, double sigma1, const std::vector<GampF>& f,
                 int K, const GaussQuad& quad = GaussQuad());

// ---- Lasso ----
double upsilon(double alpha);
struct LassoFixedPoint {
    double lambda = 0, alpha = 0, alpha0 = 0, sigma = 0, t = 0, btilde = 0, active = 0;
    double res_sigma = 0, res_t = 0, res_lambda = 0;
    int iterations = 0;
    nlohmann::json to_json() const;
};
// sigma-tilde_alpha: unique root of s^2 = sigma^2 + E(beta - ST_{alpha s}(beta + s G))^2 / delta.
double lasso_sigma_alpha(double alpha, double delta, double sigma, const Prior& prior, const GaussQuad& quad);
double lasso_Lambda(double alpha, double delta, double sigma, const Prior& prior, const GaussQuad& quad);
LassoFixedPoint lasso_calibration(double lambda, double delta, double sigma, const Prior& prior,
                                  const GaussQuad& quad = GaussQuad());
// Zero-init schedule: sigma_1^2 = sigma^2 + E beta^2/delta, t_k = alpha sigma_k, btilde_k deterministic.
SEPath se_lasso(const Prior& prior, double delta, double sigma, double alpha, int K, const GaussQuad& quad = GaussQuad());
// E(beta - ST_t(beta + s G))^2 and P(|beta + s G| > t).
double lasso_mse(const Prior& prior, double s, double t, const GaussQuad& quad);
double lasso_active(const Prior& prior, double s, double t, const GaussQuad& quad);

// ---- M-estimation ----
struct MestFixedPoint {
    double tau = 0, b = 0, delta = 0;
    double res_b = 0, res_tau = 0;
    int iterations = 0;
    double mse() const { return delta * tau * tau; }
    nlohmann::json to_json() const;
};
double mest_F(const Loss& loss, const Prior& noise, double tau, double b, const GaussQuad& quad);   // E S_b'
double mest_S2(const Loss& loss, const Prior& noise, double tau, double b, const GaussQuad& quad);  // E S_b^2
MestFixedPoint mest_fixed_point(const Loss& loss, const Prior& noise, double delta, const GaussQuad& quad = GaussQuad());
// Fisher information of a noise law (Gaussian-mixture/point components only; mixtures by quadrature).
double fisher_information(const Prior& noise, const GaussQuad& quad = GaussQuad());

// ---- logistic ----
struct LogisticFixedPoint {
    double mu = 0, sigma = 0, b = 0, kappa2 = 0, delta = 0;
    double residual = 0;
    int iterations = 0;
    nlohmann::json to_json() const;
};
struct LogisticMoments {
    double A, Bz, C;  // E 1/(1+b zeta''(p)), E Z(Y - zeta'(p)), E (Y - zeta'(p))^2
};
LogisticMoments logistic_moments(double kappa2, double delta, double mu, double sigma, double b, const GaussQuad& quad);
Eigen::Vector3d logistic_residuals(double kappa2, double delta, double mu, double sigma, double b,
                                   const GaussQuad& quad);
LogisticFixedPoint logistic_fixed_point(double kappa2, double delta, const GaussQuad& quad = GaussQuad());
// One step of the logistic SE map on (mu, sigma, b).
Eigen::Vector3d logistic_se_step(double kappa2, double delta, double mu, double sigma, double b, const GaussQuad& quad);

}  // namespace amp
