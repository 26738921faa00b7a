#include "amp/amp_core.hpp"

#include <cmath>
#include <limits>

namespace amp {

void AmpRun::note(const std::string& key, std::size_t k, double value) {
    auto& v = trace[key];
    if (v.size() <= k) v.resize(k + 1, std::numeric_limits<double>::quiet_NaN());
    v[k] = value;
}

SideSeq fixed_seq(std::vector<SideDenoiser> seq) {
    return [seq = std::move(seq)](int k, const AmpRun&) -> SideDenoiser {
        if (k < 0 || k >= int(seq.size()))
            fail(ErrorKind::Precondition, "denoiser sequence has no entry for iteration " + std::to_string(k));
        return seq[k];
    };
}

SideSeq constant_seq(SideDenoiser d) {
    return [d = std::move(d)](int, const AmpRun&) { return d; };
}

void check_finite(const Vec& x, const std::string& what, int k) {
    if (!x.allFinite())
        fail(ErrorKind::NonFinite, "non-finite " + what + " at iteration " + std::to_string(k) + " (overflow?)");
}

namespace {

double sum_deriv(const SideDenoiser& f, const Vec& x, const Vec& side) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += f.deriv(x[i], side.size() ? side[i] : 0.0);
    return s;
}

double onsager(const OnsagerMode& mode, const std::vector<double>& table, int k, double empirical, const char* name) {
    switch (mode.kind) {
        case OnsagerMode::Kind::Empirical: return empirical;
        case OnsagerMode::Kind::Zero: return 0.0;
        case OnsagerMode::Kind::Deterministic:
            if (k >= int(table.size()))
                fail(ErrorKind::Precondition,
                     std::string("deterministic Onsager table too short for ") + name + "_" + std::to_string(k));
            return table[k];
    }
    return empirical;
}

// Streaming mode frees iterates that the recursion no longer needs.
void drop(std::vector<Vec>& v, int k) {
    if (k >= 0 && k < int(v.size())) v[k] = Vec();
}
void drop(std::vector<Mat>& v, int k) {
    if (k >= 0 && k < int(v.size())) v[k] = Mat();
}

}  // namespace

AmpRun run_symmetric(const Mat& W, const Vec& gamma, const Vec& m0, const SideSeq& f, int K, const RunOptions& opt) {
    const Eigen::Index n = W.rows();
    require(W.cols() == n && m0.size() == n, "run_symmetric: dimension mismatch");
    require(gamma.size() == 0 || gamma.size() == n, "run_symmetric: side information has wrong length");
    require(K >= 1, "run_symmetric: K must be at least 1");
    AmpRun run;
    run.streaming = opt.streaming;
    run.h.assign(K + 1, Vec());
    run.m.assign(K + 1, Vec());
    run.b.assign(K + 1, 0.0);
    run.m[0] = m0;
    for (int k = 1; k <= K; ++k) {
        Vec h = W * run.m[k - 1];
        if (k >= 2) h -= run.b[k - 1] * run.m[k - 2];
        check_finite(h, "h", k);
        run.note("norm2_h", k, h.squaredNorm() / double(n));
        run.h[k] = std::move(h);
        if (k < K) {
            const SideDenoiser fk = f(k, run);
            run.m[k] = fk.apply(run.h[k], gamma);
            check_finite(run.m[k], "m", k);
            const double emp = sum_deriv(fk, run.h[k], gamma) / double(n);
            run.b[k] = onsager(opt.mode, opt.mode.b, k, emp, "b");
            if (!std::isfinite(run.b[k])) fail(ErrorKind::NonFinite, "non-finite b at iteration " + std::to_string(k));
            run.note("b_empirical", k, emp);
        }
        if (opt.streaming) drop(run.h, k - 2), drop(run.m, k - 2);
    }
    return run;
}

AmpRun run_asymmetric(const Mat& W, const Vec& beta, const Vec& gamma, const SideSeq& g, const SideSeq& f,
                      const Vec& m0, double b0, int K, const RunOptions& opt) {
    const Eigen::Index n = W.rows(), p = W.cols();
    require(m0.size() == p, "run_asymmetric: m0 must have length p");
    require(gamma.size() == 0 || gamma.size() == n, "run_asymmetric: gamma must have length n");
    require(beta.size() == 0 || beta.size() == p, "run_asymmetric: beta must have length p");
    require(K >= 1, "run_asymmetric: K must be at least 1");
    AmpRun run;
    run.streaming = opt.streaming;
    run.e.assign(K, Vec());
    run.q.assign(K, Vec());
    run.c.assign(K, 0.0);
    run.h.assign(K + 1, Vec());
    run.m.assign(K + 1, Vec());
    run.b.assign(K + 1, 0.0);
    run.m[0] = m0;
    run.b[0] = b0;
    run.trace["delta"] = {double(n) / double(p)};
    for (int k = 0; k < K; ++k) {
        Vec e = W * run.m[k];
        if (k >= 1) e -= run.b[k] * run.q[k - 1];
        check_finite(e, "e", k);
        run.note("norm2_e", k, e.squaredNorm() / double(n));
        run.e[k] = std::move(e);
        const SideDenoiser gk = g(k, run);
        run.q[k] = gk.apply(run.e[k], gamma);
        check_finite(run.q[k], "q", k);
        const double cemp = sum_deriv(gk, run.e[k], gamma) / double(n);
        run.c[k] = onsager(opt.mode, opt.mode.c, k, cemp, "c");

        Vec h = W.transpose() * run.q[k];
        h -= run.c[k] * run.m[k];
        check_finite(h, "h", k + 1);
        run.note("norm2_h", k + 1, h.squaredNorm() / double(p));
        run.h[k + 1] = std::move(h);
        const SideDenoiser fk = f(k + 1, run);
        run.m[k + 1] = fk.apply(run.h[k + 1], beta);
        check_finite(run.m[k + 1], "m", k + 1);
        const double bemp = sum_deriv(fk, run.h[k + 1], beta) / double(n);
        run.b[k + 1] = onsager(opt.mode, opt.mode.b, k + 1, bemp, "b");
        if (opt.streaming) drop(run.e, k - 1), drop(run.q, k - 1), drop(run.h, k), drop(run.m, k);
    }
    return run;
}

namespace {

Mat apply_rows(const RowMap& g, const Mat& X, const Vec& side, int k, const Mat& ctx, Mat* jac_sum,
               Eigen::Index in_dim) {
    const Eigen::Index n = X.rows();
    Mat out(n, g.out_dim);
    if (jac_sum) *jac_sum = Mat::Zero(g.out_dim, in_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec row = X.row(i).transpose();
        const double s = side.size() ? side[i] : 0.0;
        const Vec y = g.eval(row, s, k, ctx);
        if (y.size() != g.out_dim) fail(ErrorKind::Precondition, "run_matrix: row map output has wrong length");
        out.row(i) = y.transpose();
        if (jac_sum) {
            const Mat J = g.jac(row, s, k, ctx);
            if (J.rows() != g.out_dim || J.cols() != in_dim)
                fail(ErrorKind::Precondition, "run_matrix: Jacobian shape mismatch at iteration " + std::to_string(k));
            *jac_sum += J;
        }
    }
    return out;
}

// Column-by-column products so the single-column case uses exactly the vector kernel.
Mat times(const Mat& W, const Mat& M, bool transpose) {
    Mat out(transpose ? W.cols() : W.rows(), M.cols());
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const Vec mj = M.col(j);
        const Vec r = transpose ? Vec(W.transpose() * mj) : Vec(W * mj);
        out.col(j) = r;
    }
    return out;
}

// X - Y Z^T with products summed in a fixed order.
void subtract_outer(Mat& X, const Mat& Y, const Mat& Z) {
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            double s = 0.0;
            for (Eigen::Index l = 0; l < Y.cols(); ++l) s += Z(j, l) * Y(i, l);
            X(i, j) -= s;
        }
}

}  // namespace

AmpRun run_matrix(const Mat& W, const Vec& beta, const Vec& gamma, const RowMap& g, const RowMap& f, const Mat& M0,
                  const Mat& B0, int K, const RunOptions& opt) {
    const Eigen::Index n = W.rows(), p = W.cols();
    const Eigen::Index lE = M0.cols(), lH = g.out_dim;
    require(lE >= 1 && lH >= 1, "run_matrix: dimensions must be at least 1");
    require(M0.rows() == p, "run_matrix: M0 must have p rows");
    require(f.out_dim == lE, "run_matrix: f must map to the column count of M0");
    require(B0.rows() == lE && B0.cols() == lH, "run_matrix: B0 must be lE x lH");
    require(K >= 1, "run_matrix: K must be at least 1");
    AmpRun run;
    run.streaming = opt.streaming;
    run.E.assign(K, Mat());
    run.Q.assign(K, Mat());
    run.Cm.assign(K, Mat());
    run.H.assign(K + 1, Mat());
    run.M.assign(K + 1, Mat());
    run.Bm.assign(K + 1, Mat());
    run.M[0] = M0;
    run.Bm[0] = B0;
    for (int k = 0; k < K; ++k) {
        Mat E = times(W, run.M[k], false);
        if (k >= 1) subtract_outer(E, run.Q[k - 1], run.Bm[k]);
        if (!E.allFinite()) fail(ErrorKind::NonFinite, "non-finite E at iteration " + std::to_string(k));
        run.E[k] = std::move(E);
        Mat Cs;
        run.Q[k] = apply_rows(g, run.E[k], gamma, k, run.Bm[k], &Cs, lE);
        run.Cm[k] = opt.mode.kind == OnsagerMode::Kind::Zero ? Mat::Zero(lH, lE) : Mat(Cs / double(n));

        Mat H = times(W, run.Q[k], true);
        subtract_outer(H, run.M[k], run.Cm[k]);
        if (!H.allFinite()) fail(ErrorKind::NonFinite, "non-finite H at iteration " + std::to_string(k + 1));
        run.H[k + 1] = std::move(H);
        Mat Bs;
        run.M[k + 1] = apply_rows(f, run.H[k + 1], beta, k + 1, run.Cm[k], &Bs, lH);
        run.Bm[k + 1] = opt.mode.kind == OnsagerMode::Kind::Zero ? Mat::Zero(lE, lH) : Mat(Bs / double(n));
        if (opt.streaming) drop(run.E, k - 1), drop(run.Q, k - 1), drop(run.H, k), drop(run.M, k);
    }
    return run;
}

}  // namespace amp
