#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "amp/denoiser.hpp"
#include "amp/types.hpp"

namespace amp {

// How Onsager coefficients are obtained: empirical averages of derivatives, deterministic
// limits from state evolution, or forced to zero (to demonstrate why the correction is needed).
struct OnsagerMode {
    enum class Kind { Empirical, Deterministic, Zero };
    Kind kind = Kind::Empirical;
    std::vector<double> b, c;  // indexed by iteration for Deterministic

    static OnsagerMode empirical() { return {}; }
    static OnsagerMode deterministic(std::vector<double> b, std::vector<double> c = {}) {
        return {Kind::Deterministic, std::move(b), std::move(c)};
    }
    static OnsagerMode zero() { return {Kind::Zero, {}, {}}; }
};

// Iterate history. Field use per recursion:
//   symmetric   h[k] (k >= 1), m[k], b[k]
//   asymmetric  e[k], q[k], c[k] (k >= 0); h[k], m[k], b[k] (k >= 1; m[0] given)
//   spiked      v[k], vhat[k], b[k]
//   GAMP        theta[k], rhat[k], c[k] (k >= 0); beta[k], betahat[k], b[k] (k >= 1; betahat[0] given)
//   matrix      E, Q, H, M with Jacobian averages Cm, Bm
struct AmpRun {
    std::vector<Vec> h, m, e, q;
    std::vector<Vec> v, vhat;
    std::vector<Vec> theta, rhat, beta, betahat;
    std::vector<Mat> E, Q, H, M, Cm, Bm;
    std::vector<double> b, c;
    std::map<std::string, std::vector<double>> trace;  // per-iteration diagnostics
    bool streaming = false;

    void note(const std::string& key, std::size_t k, double value);
};

// Denoiser provider: called once per iteration with the run so far (enables data-driven choices).
using SideSeq = std::function<SideDenoiser(int k, const AmpRun& run)>;
SideSeq fixed_seq(std::vector<SideDenoiser> seq);
SideSeq constant_seq(SideDenoiser d);

struct RunOptions {
    OnsagerMode mode;
    bool streaming = false;  // keep only the last two iterates
};

void check_finite(const Vec& x, const std::string& what, int k);

// h^{k+1} = W m^k - b_k m^{k-1}, m^k = f_k(h^k, gamma), m^{-1} = 0; produces h^1..h^K.
AmpRun run_symmetric(const Mat& W, const Vec& gamma, const Vec& m0, const SideSeq& f, int K,
                     const RunOptions& opt = {});

// e^k = W m^k - b_k q^{k-1}, q^k = g_k(e^k, gamma), h^{k+1} = W^T q^k - c_k m^k, m^{k+1} = f_{k+1}(h^{k+1}, beta);
// c_k = mean_i g_k', b_{k+1} = (1/n) sum_j f_{k+1}'. Runs k = 0..K-1.
AmpRun run_asymmetric(const Mat& W, const Vec& beta, const Vec& gamma, const SideSeq& g, const SideSeq& f,
                      const Vec& m0, double b0, int K, const RunOptions& opt = {});

// Row-wise map with Jacobian; ctx gives the iteration and the most recent Onsager matrix of the other side.
struct RowMap {
    std::function<Vec(const Vec& row, double side, int k, const Mat& ctx)> eval;
    std::function<Mat(const Vec& row, double side, int k, const Mat& ctx)> jac;
    Eigen::Index out_dim = 1;
};

// Matrix-valued iterates: E^k = W M^k - Q^{k-1} B_k^T, H^{k+1} = W^T Q^k - M^k C_k^T.
AmpRun run_matrix(const Mat& W, const Vec& beta, const Vec& gamma, const RowMap& g, const RowMap& f, const Mat& M0,
                  const Mat& B0, int K, const RunOptions& opt = {});

}  // namespace amp
