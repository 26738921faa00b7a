#pragma once

#include <optional>
#include <string>
#include <vector>

#include "amp/amp_core.hpp"
#include "amp/loss.hpp"
#include "amp/prior.hpp"
#include "amp/se.hpp"

namespace amp {

// y = h(X beta, eps) row-wise; delta = n/p.
struct GlmInstance {
    Mat X;
    Vec beta, eps, y;
    double delta = 1.0;
    Link link;
};
// Logistic link draws eps ~ U[0,1] and ignores noise.
GlmInstance sample_glm(const Prior& beta_prior, const Prior& noise, const Link& link, Eigen::Index n,
                       Eigen::Index p, RngStream& rng);

// theta^k = X betahat^k - b_k rhat^{k-1}, rhat^k = g_k(theta^k, y), c_k = mean g_k',
// beta^{k+1} = X^T rhat^k - c_k betahat^k, betahat^{k+1} = f_{k+1}(beta^{k+1}), b_{k+1} = (1/n) sum_j f'.
AmpRun run_gamp(const GlmInstance& inst, const std::vector<GampG>& g, const std::vector<GampF>& f,
                const Vec& betahat0, double b0, int K, const OnsagerMode& mode = {});

struct EstimatorResult {
    Vec beta_hat;
    double objective = 0.0, kkt = 0.0;
    int iterations = 0;
    bool converged = false;
    bool exists = true;  // logistic MLE existence
};

// ---- Lasso: (1/2)||y - X b||^2 + lambda ||b||_1 ----
double lasso_objective(const Mat& X, const Vec& y, const Vec& b, double lambda);
double lasso_kkt(const Mat& X, const Vec& y, const Vec& b, double lambda);
EstimatorResult lasso_reference(const Mat& X, const Vec& y, double lambda, double tol = 1e-10, int max_sweeps = 100000);

struct LassoAmpResult {
    AmpRun run;  // rhat[k], beta[k+1] = X^T rhat^k + betahat^k, betahat[k]
    LassoFixedPoint fp;
    std::vector<double> t, btilde;
};
// stationary: oracle init ST_{t*}(beta + sigma* xi) with (t*, btilde*); else zero init with t_k = alpha* sigma_k.
LassoAmpResult lasso_amp(const GlmInstance& inst, const Prior& prior, double sigma, double lambda, int K,
                         bool stationary, RngStream& rng, const GaussQuad& quad = GaussQuad());

// ---- M-estimation: sum_i M(y_i - x_i^T b) ----
double mest_kkt(const Mat& X, const Vec& y, const Vec& b, const Loss& loss);
EstimatorResult ols_reference(const Mat& X, const Vec& y);
EstimatorResult mest_reference(const Mat& X, const Vec& y, const Loss& loss, double tol = 1e-10, int max_iter = 200);

struct MestAmpResult {
    AmpRun run;  // rhat[k], betahat[k]
    MestFixedPoint fp;
};
MestAmpResult mest_amp(const GlmInstance& inst, const Loss& loss, const Prior& noise, int K, RngStream& rng,
                       const GaussQuad& quad = GaussQuad());

// ---- logistic regression ----
double logistic_nll(const Mat& X, const Vec& y, const Vec& b);
double logistic_grad_norm(const Mat& X, const Vec& y, const Vec& b);
EstimatorResult logistic_mle_reference(const Mat& X, const Vec& y, double tol = 1e-10, int max_iter = 200);

struct LogisticAmpResult {
    AmpRun run;  // theta[k], betahat[k]
    LogisticFixedPoint fp;
};
LogisticAmpResult logistic_gamp(const GlmInstance& inst, const LogisticFixedPoint& fp, int K, RngStream& rng);

// mu-hat_k = (||beta^k||_p^2 - ||rhat^{k-1}||_n^2)_+^{1/2} / sqrt(E beta^2), sigma-hat_k = ||rhat^{k-1}||_n.
std::pair<double, double> gamp_se_estimates(const AmpRun& run, int k, double m2_beta);

}  // namespace amp
