#include "amp/spiked.hpp"

#include <cmath>

namespace amp {

SpikedInstance sample_spiked(const Prior& prior, double lambda, Eigen::Index n, RngStream& rng) {
    prior.require_unit_second_moment();
    require(lambda >= 0 && n >= 1, "sample_spiked: invalid arguments");
    SpikedInstance inst;
    inst.n = n;
    inst.lambda = lambda;
    RngStream sig = rng.split(1), noise = rng.split(2);
    inst.v = prior.sample_vec(n, sig);
    inst.W = sample_goe(n, noise);
    inst.A = inst.W;
    if (lambda != 0.0) inst.A.noalias() += (lambda / double(n)) * inst.v * inst.v.transpose();
    return inst;
}

std::optional<double> lambda_hat_from_eigenvalue(double lambda1) {
    if (!(lambda1 >= 2.0)) return std::nullopt;
    return 0.5 * (lambda1 + std::sqrt(lambda1 * lambda1 - 4.0));
}

EBParams empirical_bayes_params(const AmpRun& run, int k, double lambda1) {
    require(k >= 1 && k < int(run.v.size()) && run.v[k].size() && run.vhat[k - 1].size(),
            "empirical_bayes_params: iterate k unavailable (need k >= 1)");
    EBParams p;
    const double s2 = run.vhat[k - 1].squaredNorm() / double(run.vhat[k - 1].size());
    const double t2 = run.v[k].squaredNorm() / double(run.v[k].size());
    p.mu_hat = std::sqrt(std::max(0.0, t2 - s2));
    p.sigma_hat = std::sqrt(s2);
    p.lambda_hat = lambda_hat_from_eigenvalue(lambda1);
    return p;
}

InferenceOutput confidence_sets(const AmpRun& run, int k, double alpha, double lambda1) {
    require(alpha > 0 && alpha <= 1, "confidence_sets: alpha must lie in (0, 1]");
    const EBParams eb = empirical_bayes_params(run, k, lambda1);
    if (!(eb.mu_hat > 0)) fail(ErrorKind::Degenerate, "confidence_sets: mu_hat = 0, intervals undefined");
    InferenceOutput out;
    out.mu_hat = eb.mu_hat, out.sigma_hat = eb.sigma_hat, out.lambda_hat = eb.lambda_hat;
    const double z = alpha >= 1.0 ? 0.0 : normal_quantile(1.0 - alpha / 2.0);
    const Vec& v = run.v[k];
    out.lo.resize(v.size()), out.hi.resize(v.size()), out.p_values.resize(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.lo[i] = (v[i] - z * eb.sigma_hat) / eb.mu_hat;
        out.hi[i] = (v[i] + z * eb.sigma_hat) / eb.mu_hat;
        out.p_values[i] = eb.sigma_hat > 0 ? 2.0 * normal_cdf(-std::abs(v[i]) / eb.sigma_hat) : (v[i] == 0 ? 1.0 : 0.0);
    }
    return out;
}

namespace {

void note_quality(AmpRun& run, const Vec& signal, int k) {
    const Vec& x = run.vhat[k];
    const double n = double(x.size());
    run.note("mse", k, (x - signal).squaredNorm() / n);
    run.note("mse_signmin", k, std::min((x - signal).squaredNorm(), (x + signal).squaredNorm()) / n);
    const double nx = x.norm(), ns = signal.norm();
    run.note("corr", k, nx > 0 && ns > 0 ? x.dot(signal) / (nx * ns) : 0.0);
}

}  // namespace

SpikedRun run_spiked(const SpikedInstance& inst, const Prior& prior, const SpikedRunOptions& opt, RngStream& rng) {
    require(opt.K >= 1, "run_spiked: K must be at least 1");
    const Eigen::Index n = inst.n;
    SpikedRun out;
    AmpRun& run = out.run;
    const int K = opt.K;
    run.v.assign(K, Vec());
    run.vhat.assign(K, Vec());
    run.b.assign(K, 0.0);

    double lambda = opt.lambda_override.value_or(inst.lambda);
    Vec v0, vprev = Vec::Zero(n);
    double mu0 = 0.0, sigma0 = 0.0;
    switch (opt.init.kind) {
        case InitSpec::Kind::Constant:
            v0 = Vec::Constant(n, opt.init.c);
            if (std::abs(prior.m1()) < 1e-15) run.trace["uninformative"] = {1.0};
            break;
        case InitSpec::Kind::Oracle: {
            RngStream xi = rng.split(11);
            v0 = opt.init.mu0 * inst.v + xi.normal_vec(n, opt.init.sigma0);
            mu0 = opt.init.mu0, sigma0 = opt.init.sigma0;
            break;
        }
        case InitSpec::Kind::Spectral: {
            require(opt.init.c != 0.0, "spectral init requires c != 0");
            EigenOptions eo = opt.eig;
            out.eig = leading_eigenpair(inst.A, eo, opt.init.align_to_signal ? &inst.v : nullptr);
            if (!opt.lambda_override && opt.params == ParamSource::Empirical) {
                const auto lh = lambda_hat_from_eigenvalue(out.eig->value);
                if (!lh) fail(ErrorKind::Precondition, "spectral init: lambda_1(A) < 2, no lambda estimate");
                lambda = *lh;
            }
            if (!(lambda > 1.0)) fail(ErrorKind::Precondition, "spectral init requires lambda > 1");
            v0 = opt.init.c * out.eig->vector;
            vprev = v0 / lambda;
            mu0 = opt.init.c * std::sqrt(1.0 - 1.0 / (lambda * lambda));
            sigma0 = std::abs(opt.init.c) / lambda;
            break;
        }
    }
    out.lambda_used = lambda;
    if (opt.params == ParamSource::StateEvolution || opt.mode.kind == OnsagerMode::Kind::Deterministic)
        out.se = se_spiked(prior, lambda, mu0, sigma0, opt.policy, K);

    run.v[0] = v0;
    for (int k = 0; k < K; ++k) {
        double mu, sg;
        if (opt.params == ParamSource::StateEvolution || k == 0) {
            mu = k == 0 ? mu0 : out.se.mu[k];
            sg = k == 0 ? sigma0 : out.se.sigma[k];
        } else {
            const EBParams eb = empirical_bayes_params(run, k, 0.0);
            // Bayes denoiser is written for mu V + sigma G with lambda scaling absorbed in mu.
            mu = eb.mu_hat, sg = eb.sigma_hat;
        }
        out.mu_used.push_back(mu);
        out.sigma_used.push_back(sg);
        const ScalarDenoiser g = spiked_denoiser(opt.policy, prior, k, mu, sg);
        run.vhat[k] = g.apply(run.v[k]);
        check_finite(run.vhat[k], "vhat", k);
        const double emp = g.mean_deriv(run.v[k]);
        switch (opt.mode.kind) {
            case OnsagerMode::Kind::Empirical: run.b[k] = emp; break;
            case OnsagerMode::Kind::Zero: run.b[k] = 0.0; break;
            case OnsagerMode::Kind::Deterministic: run.b[k] = out.se.onsager_b.at(k); break;
        }
        note_quality(run, inst.v, k);
        if (k + 1 < K) {
            const Vec& prev = k == 0 ? vprev : run.vhat[k - 1];
            Vec next = inst.A * run.vhat[k];
            next -= run.b[k] * prev;
            check_finite(next, "v", k + 1);
            run.v[k + 1] = std::move(next);
        }
    }
    return out;
}

// ---------------------------------------------------------------- rectangular

RectInstance sample_rect_spiked(const Prior& u_prior, const Prior& v_prior, double lambda, Eigen::Index n,
                                Eigen::Index p, RngStream& rng) {
    u_prior.require_unit_second_moment();
    v_prior.require_unit_second_moment();
    require(lambda >= 0 && n >= 1 && p >= 1, "sample_rect_spiked: invalid arguments");
    RectInstance inst;
    inst.n = n, inst.p = p, inst.lambda = lambda;
    RngStream su = rng.split(1), sv = rng.split(2), sw = rng.split(3);
    inst.u = u_prior.sample_vec(n, su);
    inst.v = v_prior.sample_vec(p, sv);
    inst.A = sample_design(n, p, sw);
    if (lambda != 0.0) inst.A.noalias() += (lambda / double(n)) * inst.u * inst.v.transpose();
    return inst;
}

AmpRun run_rect_spiked(const Mat& A, const SideSeq& f, const SideSeq& g, const Vec& v0, int K,
                       const RunOptions& opt) {
    require(v0.size() == A.cols(), "run_rect_spiked: v0 must have length p");
    AmpRun seed;
    seed.h = {v0};
    const SideDenoiser f0 = f(0, seed);
    const Vec m0 = f0.apply(v0, Vec());
    AmpRun run = run_asymmetric(A, Vec(), Vec(), g, f, m0, 0.0, K, opt);
    // Store v^0 alongside the later v-side iterates.
    run.h[0] = v0;
    return run;
}

RectBayesRun rect_bayes_amp(const RectInstance& inst, const Prior& u_prior, const Prior& v_prior, int K) {
    require(K >= 1, "rect_bayes_amp: K must be at least 1");
    const double n = double(inst.n), p = double(inst.p), delta = n / p;
    // Leading right singular vector from A^T A.
    const Mat AtA = inst.A.transpose() * inst.A;
    EigenPair ep = leading_eigenpair(AtA, {}, &inst.v);
    const Vec v0 = ep.vector;
    const double s2 = ep.value;
    // Virtual previous iterate from the fixed point of linear AMP whose v-iterate is the singular vector:
    // x^2 + (1 + 1/delta - s^2) x + 1/delta = 0, g_{-1}(u^{-1}) = A v0 / (x + 1/delta).
    const double bq = 1.0 + 1.0 / delta - s2;
    const double disc = bq * bq - 4.0 / delta;
    if (!(disc > 0)) fail(ErrorKind::Precondition, "rect_bayes_amp: leading singular value inside the bulk");
    const double x = 0.5 * (-bq + std::sqrt(disc));
    const Vec qprev = inst.A * v0 / (x + 1.0 / delta);

    RectBayesRun out;
    AmpRun& run = out.run;
    // Oracle seed for (mu, sigma) of v^0: the first denoiser needs the effective observation parameters.
    const double mu0 = std::abs(v0.dot(inst.v)) / p;
    const double sg0 = std::sqrt(std::max(1e-12, 1.0 - mu0 * mu0));
    Vec v = v0;
    Vec m_prev, q_prev = qprev;
    double mu_v = mu0, sg_v = sg0;
    for (int k = 0; k < K; ++k) {
        const ScalarDenoiser fk = posterior_mean_denoiser(v_prior, mu_v, sg_v);
        const Vec m = fk.apply(v);
        const double b = fk.mean_deriv(v) * p / n;
        out.corr_v.push_back(m.norm() > 0 ? std::abs(m.dot(inst.v)) / (m.norm() * inst.v.norm()) : 0.0);
        run.h.push_back(v), run.m.push_back(m), run.b.push_back(b);
        Vec u = inst.A * m;
        u -= b * q_prev;
        check_finite(u, "u", k);
        const double sg_u = std::sqrt(m.squaredNorm() / n);
        const double mu_u = std::sqrt(std::max(0.0, u.squaredNorm() / n - sg_u * sg_u));
        const ScalarDenoiser gk = posterior_mean_denoiser(u_prior, mu_u, sg_u);
        const Vec q = gk.apply(u);
        const double c = gk.mean_deriv(u);
        run.e.push_back(u), run.q.push_back(q), run.c.push_back(c);
        Vec vn = inst.A.transpose() * q;
        vn -= c * m;
        check_finite(vn, "v", k + 1);
        sg_v = std::sqrt(q.squaredNorm() / n);
        mu_v = std::sqrt(std::max(0.0, vn.squaredNorm() / p - sg_v * sg_v));
        v = std::move(vn);
        q_prev = q;
        m_prev = m;
    }
    return out;
}

// ---------------------------------------------------------------- power method equivalence

PowerReport power_equivalence_check(const SpikedInstance& inst, double mu0, int K, RngStream& rng,
                                    const EigenOptions& eig) {
    require(inst.lambda > 1.0, "power_equivalence_check: requires lambda > 1");
    require(K >= 1, "power_equivalence_check: K must be at least 1");
    const Eigen::Index n = inst.n;
    PowerReport rep;
    rep.eig = leading_eigenpair(inst.A, eig, &inst.v);
    rep.mu = power_linear_mu(inst.lambda, mu0, K);
    for (int k = 0; k <= K; ++k) rep.beta.push_back(std::sqrt(1.0 + rep.mu[k] * rep.mu[k]));
    AmpRun& run = rep.run;
    RngStream xi = rng.split(21);
    run.vhat.push_back(mu0 * inst.v + xi.normal_vec(n));
    run.v.push_back(Vec());
    auto align = [&](const Vec& x) { return std::abs(dot_n(x, rep.eig.vector)) / norm_n(x); };
    rep.alignment.push_back(align(run.vhat[0]));
    for (int k = 0; k < K; ++k) {
        Vec next = inst.A * run.vhat[k];
        if (k >= 1) next -= run.vhat[k - 1] / rep.beta[k - 1];
        check_finite(next, "v", k + 1);
        run.v.push_back(next);
        run.vhat.push_back(next / rep.beta[k]);
        run.b.push_back(k >= 1 ? 1.0 / rep.beta[k - 1] : 0.0);
        rep.alignment.push_back(align(run.vhat.back()));
    }
    return rep;
}

}  // namespace amp
