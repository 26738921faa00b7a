#include "amp/gamp.hpp"

#include <cmath>

#include "amp/ensembles.hpp"

namespace amp {

GlmInstance sample_glm(const Prior& beta_prior, const Prior& noise, const Link& link, Eigen::Index n,
                       Eigen::Index p, RngStream& rng) {
    require(n >= 1 && p >= 1, "sample_glm: dimensions must be positive");
    GlmInstance inst;
    inst.link = link;
    inst.delta = double(n) / double(p);
    RngStream sx = rng.split(1), sb = rng.split(2), se = rng.split(3);
    inst.X = sample_design(n, p, sx);
    inst.beta = beta_prior.sample_vec(p, sb);
    if (link.kind == Link::Kind::Logistic) {
        inst.eps.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) inst.eps[i] = se.uniform();
    } else {
        inst.eps = noise.sample_vec(n, se);
    }
    const Vec theta = inst.X * inst.beta;
    inst.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) inst.y[i] = link(theta[i], inst.eps[i]);
    return inst;
}

AmpRun run_gamp(const GlmInstance& inst, const std::vector<GampG>& g, const std::vector<GampF>& f,
                const Vec& betahat0, double b0, int K, const OnsagerMode& mode) {
    require(int(g.size()) >= K && int(f.size()) >= K + 1, "run_gamp: need g_0..g_{K-1} and f_1..f_K");
    require(betahat0.size() == inst.X.cols(), "run_gamp: betahat0 must have length p");
    // GAMP is the asymmetric recursion with gamma = y and beta-side maps that ignore side information.
    SideSeq gs = [&](int k, const AmpRun&) {
        const GampG& gk = g[k];
        return SideDenoiser{gk.eval, gk.du, "gamp_g"};
    };
    SideSeq fs = [&](int k, const AmpRun&) {
        const GampF& fk = f[k];
        return SideDenoiser{[e = fk.eval](double x, double) { return e(x); },
                            [d = fk.deriv](double x, double) { return d(x); }, "gamp_f"};
    };
    RunOptions opt;
    opt.mode = mode;
    AmpRun run = run_asymmetric(inst.X, Vec(), inst.y, gs, fs, betahat0, b0, K, opt);
    run.theta = std::move(run.e);
    run.rhat = std::move(run.q);
    run.beta = std::move(run.h);
    run.betahat = std::move(run.m);
    run.e.clear(), run.q.clear(), run.h.clear(), run.m.clear();
    return run;
}

std::pair<double, double> gamp_se_estimates(const AmpRun& run, int k, double m2_beta) {
    require(k >= 1 && k < int(run.beta.size()) && k - 1 < int(run.rhat.size()), "gamp_se_estimates: need k >= 1");
    require(m2_beta > 0, "gamp_se_estimates: E(beta^2) must be positive");
    const Vec& b = run.beta[k];
    const Vec& r = run.rhat[k - 1];
    const double s2 = r.squaredNorm() / double(r.size());
    const double t2 = b.squaredNorm() / double(b.size());
    return {std::sqrt(std::max(0.0, t2 - s2) / m2_beta), std::sqrt(s2)};
}

// ---------------------------------------------------------------- Lasso

double lasso_objective(const Mat& X, const Vec& y, const Vec& b, double lambda) {
    return 0.5 * (y - X * b).squaredNorm() + lambda * b.lpNorm<1>();
}

double lasso_kkt(const Mat& X, const Vec& y, const Vec& b, double lambda) {
    const Vec grad = X.transpose() * (y - X * b);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        const double d = b[j] != 0.0 ? std::abs(grad[j] - lambda * (b[j] > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(grad[j]) - lambda);
        worst = std::max(worst, d);
    }
    return worst;
}

EstimatorResult lasso_reference(const Mat& X, const Vec& y, double lambda, double tol, int max_sweeps) {
    require(lambda > 0, "lasso_reference: lambda must be positive");
    const Eigen::Index p = X.cols();
    const Vec col2 = X.colwise().squaredNorm().transpose();
    Vec b = Vec::Zero(p), r = y;
    EstimatorResult res;
    // One coordinate update; returns the change scaled to the column norm.
    auto update = [&](Eigen::Index j) {
        if (col2[j] == 0.0) return 0.0;
        const double z = X.col(j).dot(r) + col2[j] * b[j];
        const double nb = (std::abs(z) > lambda ? z - std::copysign(lambda, z) : 0.0) / col2[j];
        const double d = nb - b[j];
        if (d != 0.0) {
            r.noalias() -= d * X.col(j);
            b[j] = nb;
        }
        return std::abs(d) * std::sqrt(col2[j]);
    };
    int sweeps = 0;
    while (sweeps < max_sweeps) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) change = std::max(change, update(j));
        ++sweeps;
        if (change < tol) {
            res.converged = true;
            break;
        }
        // Active-set passes until they settle, then another full sweep.
        while (sweeps < max_sweeps) {
            double ac = 0.0;
            for (Eigen::Index j = 0; j < p; ++j)
                if (b[j] != 0.0) ac = std::max(ac, update(j));
            ++sweeps;
            if (ac < tol) break;
        }
    }
    res.beta_hat = b;
    res.iterations = sweeps;
    res.objective = lasso_objective(X, y, b, lambda);
    res.kkt = lasso_kkt(X, y, b, lambda);
    return res;
}

LassoAmpResult lasso_amp(const GlmInstance& inst, const Prior& prior, double sigma, double lambda, int K,
                         bool stationary, RngStream& rng, const GaussQuad& quad) {
    require(K >= 1, "lasso_amp: K must be at least 1");
    LassoAmpResult out;
    out.fp = lasso_calibration(lambda, inst.delta, sigma, prior, quad);
    const Eigen::Index n = inst.X.rows(), p = inst.X.cols();
    Vec bh0;
    std::vector<double> t(K + 1), bt(K + 1, 0.0);
    if (stationary) {
        RngStream xi = rng.split(31);
        const Vec z = inst.beta + xi.normal_vec(p, out.fp.sigma);
        bh0 = z.unaryExpr([&](double x) { return soft_threshold(out.fp.t, x).value; });
        std::fill(t.begin(), t.end(), out.fp.t);
        std::fill(bt.begin(), bt.end(), out.fp.btilde);
        bt[0] = 0.0;  // rhat^{-1} = 0
    } else {
        bh0 = Vec::Zero(p);
        const SEPath se = se_lasso(prior, inst.delta, sigma, out.fp.alpha, K, quad);
        for (int k = 1; k <= K; ++k) t[k] = se.threshold[k], bt[k] = se.onsager_b[k];
        t[0] = 0.0;
    }
    AmpRun& run = out.run;
    run.betahat = {bh0};
    run.beta = {Vec()};
    run.theta.clear(), run.rhat.clear();
    for (int k = 0; k < K; ++k) {
        Vec r = inst.y - inst.X * run.betahat[k];
        if (k >= 1) r += bt[k] * run.rhat[k - 1];
        check_finite(r, "rhat", k);
        run.rhat.push_back(std::move(r));
        run.b.push_back(bt[k]);
        run.c.push_back(-1.0);
        Vec bnext = inst.X.transpose() * run.rhat[k];
        bnext += run.betahat[k];
        check_finite(bnext, "beta", k + 1);
        const double tk = t[k + 1];
        run.betahat.push_back(bnext.unaryExpr([tk](double x) { return soft_threshold(tk, x).value; }));
        run.beta.push_back(std::move(bnext));
        const double mse = (run.betahat.back() - inst.beta).squaredNorm() / double(p);
        run.note("mse", k + 1, mse);
        run.note("active", k + 1, double((run.betahat.back().array() != 0.0).count()) / double(p));
        run.note("sigma_hat", k + 1, std::sqrt(run.rhat[k].squaredNorm() / double(n)));
    }
    out.t = t, out.btilde = bt;
    return out;
}

// ---------------------------------------------------------------- M-estimation

namespace {
double loss_curv(const Loss& loss, double w) {
    switch (loss.kind) {
        case Loss::Kind::Square: return 1.0;
        case Loss::Kind::Huber: return std::abs(w) <= loss.param ? 1.0 : 0.0;
        case Loss::Kind::PseudoHuber: {
            const double u = 1.0 + (w / loss.param) * (w / loss.param);
            return 1.0 / (u * std::sqrt(u));
        }
        case Loss::Kind::LogisticZeta: return zeta2(w);
        default: fail(ErrorKind::Precondition, "mest_reference: loss '" + loss.name() + "' has no curvature");
    }
}
double mest_objective(const Mat& X, const Vec& y, const Vec& b, const Loss& loss) {
    const Vec r = y - X * b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += loss.value(r[i]);
    return s;
}
}  // namespace

double mest_kkt(const Mat& X, const Vec& y, const Vec& b, const Loss& loss) {
    const Vec r = y - X * b;
    const Vec psi = r.unaryExpr([&](double w) { return loss.deriv(w); });
    return (X.transpose() * psi).cwiseAbs().maxCoeff();
}

EstimatorResult ols_reference(const Mat& X, const Vec& y) {
    require(X.rows() >= X.cols(), "ols_reference: needs n >= p");
    EstimatorResult res;
    const Mat G = X.transpose() * X;
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) fail(ErrorKind::Solver, "ols_reference: X^T X is singular");
    res.beta_hat = llt.solve(X.transpose() * y);
    res.objective = 0.5 * (y - X * res.beta_hat).squaredNorm();
    res.kkt = mest_kkt(X, y, res.beta_hat, Loss::square());
    res.converged = true;
    res.iterations = 1;
    return res;
}

EstimatorResult mest_reference(const Mat& X, const Vec& y, const Loss& loss, double tol, int max_iter) {
    EstimatorResult res = ols_reference(X, y);
    if (loss.kind == Loss::Kind::Square) return res;
    Vec b = res.beta_hat;
    double obj = mest_objective(X, y, b, loss);
    int it = 0;
    res.converged = false;
    for (; it < max_iter; ++it) {
        const Vec r = y - X * b;
        Vec psi(r.size()), w(r.size());
        for (Eigen::Index i = 0; i < r.size(); ++i) psi[i] = loss.deriv(r[i]), w[i] = loss_curv(loss, r[i]);
        const Vec grad = -(X.transpose() * psi);
        if (grad.cwiseAbs().maxCoeff() < tol) {
            res.converged = true;
            break;
        }
        Mat H = X.transpose() * w.asDiagonal() * X;
        H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().mean());
        const Vec step = H.ldlt().solve(-grad);
        // Near the optimum the decrease is below the rounding level of the summed objective; accept such steps.
        const double slack = 1e-13 * (1.0 + std::abs(obj));
        double s = 1.0;
        Vec bn = b + step;
        double on = mest_objective(X, y, bn, loss);
        for (int ls = 0; ls < 50 && on > obj + slack; ++ls)
            s *= 0.5, bn = b + s * step, on = mest_objective(X, y, bn, loss);
        if (on > obj + slack) break;
        if ((bn - b).norm() == 0.0) break;
        b = bn, obj = on;
    }
    res.beta_hat = b;
    res.iterations = it;
    res.objective = obj;
    res.kkt = mest_kkt(X, y, b, loss);
    if (res.kkt < tol) res.converged = true;
    return res;
}

MestAmpResult mest_amp(const GlmInstance& inst, const Loss& loss, const Prior& noise, int K, RngStream& rng,
                       const GaussQuad& quad) {
    require(K >= 1, "mest_amp: K must be at least 1");
    MestAmpResult out;
    out.fp = mest_fixed_point(loss, noise, inst.delta, quad);
    const Eigen::Index p = inst.X.cols();
    const double b = out.fp.b, delta = inst.delta;
    RngStream xi = rng.split(41);
    AmpRun& run = out.run;
    run.betahat = {inst.beta + xi.normal_vec(p, std::sqrt(delta) * out.fp.tau)};
    run.rhat = {inst.y - inst.X * run.betahat[0]};
    auto S = [&](const Vec& r) { return r.unaryExpr([&](double x) { return moreau_score(loss, b, x).first; }); };
    for (int k = 0; k < K; ++k) {
        const Vec s = S(run.rhat[k]);
        Vec bn = delta * (inst.X.transpose() * s);
        bn += run.betahat[k];
        check_finite(bn, "betahat", k + 1);
        Vec rn = inst.y - inst.X * bn;
        rn += s;
        check_finite(rn, "rhat", k + 1);
        run.betahat.push_back(std::move(bn));
        run.rhat.push_back(std::move(rn));
        run.note("mse", k + 1, (run.betahat.back() - inst.beta).squaredNorm() / double(p));
    }
    return out;
}

// ---------------------------------------------------------------- logistic

double logistic_nll(const Mat& X, const Vec& y, const Vec& b) {
    const Vec t = X * b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) s += zeta(t[i]) - y[i] * t[i];
    return s;
}

double logistic_grad_norm(const Mat& X, const Vec& y, const Vec& b) {
    const Vec t = X * b;
    const Vec r = t.unaryExpr([](double z) { return zeta1(z); }) - y;
    return (X.transpose() * r).norm();
}

EstimatorResult logistic_mle_reference(const Mat& X, const Vec& y, double tol, int max_iter) {
    const Eigen::Index p = X.cols();
    const double limit = 1e4 * std::sqrt(double(p));
    EstimatorResult res;
    Vec b = Vec::Zero(p);
    double obj = logistic_nll(X, y, b);
    int it = 0;
    for (; it < max_iter; ++it) {
        const Vec t = X * b;
        Vec r(t.size()), w(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) r[i] = zeta1(t[i]) - y[i], w[i] = zeta2(t[i]);
        const Vec grad = X.transpose() * r;
        if (grad.norm() <= tol) {
            res.converged = true;
            break;
        }
        Mat H = X.transpose() * w.asDiagonal() * X;
        H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().mean());
        const Vec step = H.ldlt().solve(-grad);
        const double slack = 1e-13 * (1.0 + std::abs(obj));
        double s = 1.0;
        Vec bn = b + step;
        double on = logistic_nll(X, y, bn);
        for (int ls = 0; ls < 60 && !(on <= obj + slack); ++ls) s *= 0.5, bn = b + s * step, on = logistic_nll(X, y, bn);
        if (!(on <= obj + slack)) break;
        b = bn, obj = on;
        if (b.norm() > limit) {
            // Likelihood keeps improving along a ray: data are (quasi-)separable.
            res.exists = false;
            break;
        }
    }
    // If b classifies every point strictly correctly, scaling b up lowers the loss without bound.
    if (res.exists && b.norm() > 0) {
        const Vec t = X * b;
        bool separated = true;
        for (Eigen::Index i = 0; i < t.size() && separated; ++i) separated = (2.0 * y[i] - 1.0) * t[i] > 0;
        if (separated) res.exists = false, res.converged = false;
    }
    res.beta_hat = b;
    res.iterations = it;
    res.objective = obj;
    res.kkt = logistic_grad_norm(X, y, b);
    if (res.kkt <= tol && res.exists) res.converged = true;
    return res;
}

LogisticAmpResult logistic_gamp(const GlmInstance& inst, const LogisticFixedPoint& fp, int K, RngStream& rng) {
    require(K >= 1, "logistic_gamp: K must be at least 1");
    require(fp.b > 0, "logistic_gamp: fixed point required");
    LogisticAmpResult out;
    out.fp = fp;
    const Eigen::Index p = inst.X.cols();
    const double b = fp.b, delta = inst.delta;
    RngStream xi = rng.split(51);
    AmpRun& run = out.run;
    run.betahat = {fp.mu * inst.beta + xi.normal_vec(p, fp.sigma)};
    run.theta = {inst.X * run.betahat[0]};
    for (int k = 0; k < K; ++k) {
        const Vec& th = run.theta[k];
        Vec g(th.size());
        for (Eigen::Index i = 0; i < th.size(); ++i)
            g[i] = inst.y[i] - zeta1(prox_zeta(b, th[i] + b * inst.y[i]));
        Vec bn = (delta * b) * (inst.X.transpose() * g);
        bn += run.betahat[k];
        check_finite(bn, "betahat", k + 1);
        if (bn.norm() > 1e4 * std::sqrt(double(p)))
            fail(ErrorKind::NonFinite, "logistic_gamp: iterates diverging at iteration " + std::to_string(k + 1) +
                                           " (near-separable data?)");
        Vec tn = inst.X * bn;
        tn -= b * g;
        run.rhat.push_back(std::move(g));
        run.betahat.push_back(std::move(bn));
        run.theta.push_back(std::move(tn));
        run.note("err", k + 1,
                 (run.betahat.back() - fp.mu * inst.beta).squaredNorm() / double(p));
    }
    return out;
}

}  // namespace amp
