#pragma once

#include <optional>
#include <vector>

#include "amp/amp_core.hpp"
#include "amp/ensembles.hpp"
#include "amp/prior.hpp"
#include "amp/se.hpp"

namespace amp {

// A = (lambda/n) v v^T + W.
struct SpikedInstance {
    Eigen::Index n = 0;
    double lambda = 0.0;
    Vec v;
    Mat W, A;
};
SpikedInstance sample_spiked(const Prior& prior, double lambda, Eigen::Index n, RngStream& rng);

struct InitSpec {
    enum class Kind { Constant, Spectral, Oracle };
    Kind kind = Kind::Spectral;
    double c = 1.0;
    double mu0 = 0.0, sigma0 = 1.0;  // Oracle: v^0 = mu0 v + sigma0 xi
    bool align_to_signal = true;     // Spectral: orient phi-hat against v (simulation only)

    static InitSpec constant(double c) { return {Kind::Constant, c}; }
    static InitSpec spectral(double c = 1.0) { return {Kind::Spectral, c}; }
    static InitSpec oracle(double mu0, double sigma0) { return {Kind::Oracle, 1.0, mu0, sigma0}; }
};

// Where the (mu_k, sigma_k) used to build g_k come from.
enum class ParamSource { StateEvolution, Empirical };

struct SpikedRunOptions {
    int K = 10;
    InitSpec init;
    SpikedPolicy policy;
    OnsagerMode mode;
    ParamSource params = ParamSource::StateEvolution;
    std::optional<double> lambda_override;  // lambda used by the algorithm; default: true lambda
    EigenOptions eig;
};

struct SpikedRun {
    AmpRun run;  // v[k], vhat[k] for k = 0..K-1, b[k]
    SEPath se;   // SE from the same initial (mu0, sigma0)
    std::optional<EigenPair> eig;
    double lambda_used = 0.0;
    std::vector<double> mu_used, sigma_used;
};

SpikedRun run_spiked(const SpikedInstance& inst, const Prior& prior, const SpikedRunOptions& opt, RngStream& rng);

struct EBParams {
    double mu_hat = 0.0, sigma_hat = 0.0;
    std::optional<double> lambda_hat;
};
// mu-hat_k = (||v^k||^2 - ||vhat^{k-1}||^2)_+^{1/2}, sigma-hat_k = ||vhat^{k-1}||, lambda-hat from lambda1.
EBParams empirical_bayes_params(const AmpRun& run, int k, double lambda1);
std::optional<double> lambda_hat_from_eigenvalue(double lambda1);

struct InferenceOutput {
    std::vector<double> lo, hi, p_values;
    double mu_hat = 0.0, sigma_hat = 0.0;
    std::optional<double> lambda_hat;
};
InferenceOutput confidence_sets(const AmpRun& run, int k, double alpha, double lambda1 = 0.0);

// ---- rectangular rank one ----
struct RectInstance {
    Eigen::Index n = 0, p = 0;
    double lambda = 0.0;
    Vec u, v;
    Mat A;
};
RectInstance sample_rect_spiked(const Prior& u_prior, const Prior& v_prior, double lambda, Eigen::Index n,
                                Eigen::Index p, RngStream& rng);

// u^k = A f_k(v^k) - b_k g_{k-1}(u^{k-1}), v^{k+1} = A^T g_k(u^k) - c_k f_k(v^k).
// Stored as: e[k] = u^k, q[k] = g_k(u^k), h[k] = v^k, m[k] = f_k(v^k).
AmpRun run_rect_spiked(const Mat& A, const SideSeq& f, const SideSeq& g, const Vec& v0, int K,
                       const RunOptions& opt = {});

// Bayes rectangular AMP from the leading right singular vector, with (mu, sigma) estimated from the iterates.
struct RectBayesRun {
    AmpRun run;
    std::vector<double> corr_v;  // |<f_k(v^k), v>| / (||f_k(v^k)|| ||v||), k = 0..K-1
};
RectBayesRun rect_bayes_amp(const RectInstance& inst, const Prior& u_prior, const Prior& v_prior, int K);

// ---- AMP with linear g_k and its power-method limit ----
struct PowerReport {
    std::vector<double> alignment;  // |<vhat^k, phi>_n| / ||vhat^k||_n
    std::vector<double> beta, mu;
    EigenPair eig;
    AmpRun run;
};
PowerReport power_equivalence_check(const SpikedInstance& inst, double mu0, int K, RngStream& rng,
                                    const EigenOptions& eig = {});

}  // namespace amp
