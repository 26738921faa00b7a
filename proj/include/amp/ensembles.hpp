#pragma once

#include <optional>

#include "amp/rng.hpp"
#include "amp/types.hpp"

namespace amp {

// Symmetric n x n, off-diagonal N(0,1/n), diagonal N(0,2/n).
Mat sample_goe(Eigen::Index n, RngStream& rng);

// n x p with i.i.d. N(0,1/n) entries.
Mat sample_design(Eigen::Index n, Eigen::Index p, RngStream& rng);

enum class Orientation { AlignedToReference, DeterministicSign };
enum class EigenMethod { Lanczos, Power };

struct EigenPair {
    double value = 0.0;
    Vec vector;  // scaled so that ||vector||_n = 1
    std::optional<double> gap;
    Orientation orientation = Orientation::DeterministicSign;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // ||A v - value v||_n
};

struct EigenOptions {
    double tol = 1e-10;
    int max_iter = 0;  // 0 selects the method default (max(10n, 1000) for power, min(n,400) Krylov steps for Lanczos)
    EigenMethod method = EigenMethod::Lanczos;
    bool want_gap = false;
    std::optional<double> shift;  // power method only; default is the max row abs sum
};

EigenPair leading_eigenpair(const Mat& A, const EigenOptions& opts = {}, const Vec* reference = nullptr);

// Fixes the sign: <v, ref> >= 0 if ref given, else the largest-|entry| coordinate (lowest index on ties) positive.
void orient(Vec& v, const Vec* reference);

}  // namespace amp
