#include "amp/se.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

namespace amp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// E fn(gamma) over a side-information law.
double expect_side(const Prior& p, const GaussQuad& q, const std::function<double(double)>& fn) {
    double s = 0.0;
    for (const auto& c : p.convolved(0.0)) {
        if (c.sd == 0.0)
            s += c.weight * fn(c.mean);
        else
            s += c.weight * q.expect([&](double z) { return fn(c.mean + c.sd * z); });
    }
    return s;
}

// A few representative side-information values for non-constancy checks.
std::vector<double> side_points(const Prior& p) {
    std::vector<double> pts;
    for (const auto& c : p.convolved(0.0)) {
        pts.push_back(c.mean);
        if (c.sd > 0) pts.push_back(c.mean + c.sd);
    }
    return pts;
}

void require_nonconstant(const SideDenoiser& f, const Prior& side, int k) {
    if (!f.eval) fail(ErrorKind::Precondition, "state evolution: missing denoiser at iteration " + std::to_string(k));
    double lo = kInf, hi = -kInf;
    for (double g : side_points(side))
        for (double x : {-2.0, -1.0, -0.3, 0.0, 0.4, 1.0, 2.0}) {
            const double v = f.eval(x, g);
            lo = std::min(lo, v), hi = std::max(hi, v);
        }
    if (!(hi - lo > 0))
        fail(ErrorKind::Precondition,
             "state evolution: denoiser " + std::to_string(k) + " is constant (non-degeneracy condition violated)");
}

void check_psd(const Mat& T, int k) {
    if (k == 0) return;
    Eigen::SelfAdjointEigenSolver<Mat> es(T.topLeftCorner(k, k), Eigen::EigenvaluesOnly);
    if (es.eigenvalues()[0] < 1e-10)
        fail(ErrorKind::Degenerate, "state evolution: covariance ledger lost positive definiteness at size " +
                                        std::to_string(k) + " (non-degeneracy condition violated)");
}

}  // namespace

std::string flavor_name(SEFlavor f) {
    switch (f) {
        case SEFlavor::SymmetricAbstract: return "symmetric";
        case SEFlavor::Asymmetric: return "asymmetric";
        case SEFlavor::Spiked: return "spiked";
        case SEFlavor::Gamp: return "gamp";
        case SEFlavor::Linear: return "linear";
        case SEFlavor::Lasso: return "lasso";
        case SEFlavor::Mest: return "mest";
        case SEFlavor::Logistic: return "logistic";
        case SEFlavor::Rect: return "rect";
    }
    return "?";
}

nlohmann::json SEPath::to_json() const {
    nlohmann::json j;
    j["flavor"] = flavor_name(flavor);
    auto put = [&](const char* key, const std::vector<double>& v) {
        if (!v.empty()) j[key] = v;
    };
    put("mu", mu), put("sigma", sigma), put("tau", tau), put("rho", rho);
    put("onsager_b", onsager_b), put("onsager_c", onsager_c), put("threshold", threshold);
    put("mu_z", muZ), put("sigma_z", sigmaZ);
    if (ledger.size()) {
        j["ledger"] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < ledger.rows(); ++i) {
            std::vector<double> row(ledger.cols());
            for (Eigen::Index c = 0; c < ledger.cols(); ++c) row[c] = ledger(i, c);
            j["ledger"].push_back(row);
        }
    }
    if (!flags.empty()) j["flags"] = flags;
    return j;
}

// ---------------------------------------------------------------- symmetric

SEPath se_symmetric(const std::vector<SideDenoiser>& f, const Prior& gamma, double tau1, int K,
                    const std::function<double(double)>& F0, const GaussQuad& quad) {
    require(tau1 > 0, "se_symmetric: tau1 must be positive");
    require(K >= 1, "se_symmetric: K must be at least 1");
    require(int(f.size()) >= K, "se_symmetric: need denoisers f_1..f_{K-1}");
    for (int k = 1; k < K; ++k) require_nonconstant(f[k], gamma, k);

    SEPath path;
    path.flavor = SEFlavor::SymmetricAbstract;
    const bool full = K <= kLedgerMax;
    // Rows/cols of the working ledger are iterates h^1..h^K; without full storage only the
    // diagonal plus the row needed for the next step would be required, but K > 64 is only
    // supported for the diagonal path.
    Mat T = Mat::Zero(K, K);
    T(0, 0) = tau1 * tau1;
    for (int k = 2; k <= K; ++k) {
        const SideDenoiser& fk = f[k - 1];
        const double vk = T(k - 2, k - 2);
        if (full) {
            T(k - 1, 0) = T(0, k - 1) =
                F0 ? expect_side(gamma, quad,
                                 [&](double g) {
                                     return F0(g) * quad.expect([&](double u) { return fk.eval(std::sqrt(vk) * u, g); });
                                 })
                   : 0.0;
            for (int l = 2; l < k; ++l) {
                const SideDenoiser& fl = f[l - 1];
                const double val = expect_side(gamma, quad, [&](double g) {
                    return quad.expect_cov([&](double a, double b) { return fl.eval(a, g) * fk.eval(b, g); },
                                           T(l - 2, l - 2), T(l - 2, k - 2), vk);
                });
                T(k - 1, l - 1) = T(l - 1, k - 1) = val;
            }
        }
        T(k - 1, k - 1) = expect_side(gamma, quad, [&](double g) {
            return quad.expect([&](double u) {
                const double v = fk.eval(std::sqrt(vk) * u, g);
                return v * v;
            });
        });
        if (full) check_psd(T, k);
    }
    path.tau.assign(K + 1, 0.0);
    for (int k = 1; k <= K; ++k) path.tau[k] = std::sqrt(T(k - 1, k - 1));
    path.onsager_b.assign(K + 1, 0.0);
    for (int k = 1; k < int(f.size()) && k <= K; ++k) {
        if (!f[k].deriv) continue;
        const double v = T(k - 1, k - 1);
        path.onsager_b[k] = expect_side(
            gamma, quad, [&](double g) { return quad.expect([&](double u) { return f[k].deriv(std::sqrt(v) * u, g); }); });
    }
    if (full)
        path.ledger = T;
    else
        path.ledger = T.diagonal().asDiagonal();
    return path;
}

// ---------------------------------------------------------------- asymmetric

SEPath se_asymmetric(const std::vector<SideDenoiser>& g, const std::vector<SideDenoiser>& f, const Prior& gamma,
                     const Prior& beta, double delta, double sigma0, int K, const GaussQuad& quad) {
    require(delta > 0 && sigma0 > 0 && K >= 1, "se_asymmetric: invalid arguments");
    require(int(g.size()) >= K && int(f.size()) >= K + 1, "se_asymmetric: need g_0..g_{K-1} and f_1..f_K");
    SEPath path;
    path.flavor = SEFlavor::Asymmetric;
    path.sigma.assign(K + 1, 0.0);
    path.tau.assign(K + 1, 0.0);
    path.onsager_c.assign(K + 1, 0.0);
    path.onsager_b.assign(K + 1, 0.0);
    path.sigma[0] = sigma0;
    for (int k = 0; k < K; ++k) {
        const double s = path.sigma[k];
        path.tau[k + 1] = std::sqrt(expect_side(gamma, quad, [&](double gm) {
            return quad.expect([&](double u) {
                const double v = g[k].eval(s * u, gm);
                return v * v;
            });
        }));
        path.onsager_c[k] = expect_side(
            gamma, quad, [&](double gm) { return quad.expect([&](double u) { return g[k].deriv(s * u, gm); }); });
        const double t = path.tau[k + 1];
        path.sigma[k + 1] = std::sqrt(expect_side(beta, quad, [&](double bt) {
                                          return quad.expect([&](double u) {
                                              const double v = f[k + 1].eval(t * u, bt);
                                              return v * v;
                                          });
                                      }) /
                                      delta);
        path.onsager_b[k + 1] =
            expect_side(beta, quad,
                        [&](double bt) { return quad.expect([&](double u) { return f[k + 1].deriv(t * u, bt); }); }) /
            delta;
    }
    return path;
}

// ---------------------------------------------------------------- spiked

std::string SpikedPolicy::name() const {
    switch (kind) {
        case Kind::Bayes: return "bayes";
        case Kind::SoftThreshold: return "soft_threshold";
        case Kind::PowerLinear: return "power_linear";
        case Kind::Custom: return "custom";
    }
    return "?";
}

ScalarDenoiser spiked_denoiser(const SpikedPolicy& policy, const Prior& prior, int k, double mu, double sigma) {
    switch (policy.kind) {
        case SpikedPolicy::Kind::Bayes:
            if (mu == 0.0 && sigma == 0.0) return posterior_mean_denoiser(prior, 0.0, 1.0);
            return posterior_mean_denoiser(prior, mu, sigma);
        case SpikedPolicy::Kind::SoftThreshold:
            require(sigma > 0, "soft-threshold policy needs sigma_k > 0");
            return soft_threshold_denoiser(policy.st_factor * sigma);
        case SpikedPolicy::Kind::PowerLinear: {
            const double b = std::sqrt(mu * mu + sigma * sigma);
            require(b > 0, "power-linear policy needs a non-zero iterate");
            return linear_denoiser(1.0 / b);
        }
        case SpikedPolicy::Kind::Custom:
            require(bool(policy.custom), "custom policy without a denoiser provider");
            return policy.custom(k, mu, sigma);
    }
    fail(ErrorKind::Precondition, "unknown policy");
}

SEPath se_spiked(const Prior& prior, double lambda, double mu0, double sigma0, const SpikedPolicy& policy, int K,
                 const GaussQuad& quad) {
    prior.require_unit_second_moment();
    require(lambda > 0 && sigma0 >= 0 && K >= 0, "se_spiked: invalid arguments");
    SEPath path;
    path.flavor = SEFlavor::Spiked;
    path.mu = {mu0};
    path.sigma = {sigma0};
    if (mu0 == 0.0 && std::abs(prior.m1()) < 1e-15) path.flags.push_back("uninformative");
    for (int k = 0; k < K; ++k) {
        const double mu = path.mu[k], sg = path.sigma[k];
        const ScalarDenoiser g = spiked_denoiser(policy, prior, k, mu, sg);
        double mu1, s2;
        if (policy.kind == SpikedPolicy::Kind::Bayes && mu != 0.0) {
            const double rho = sg == 0.0 ? kInf : (mu / sg) * (mu / sg);
            s2 = 1.0 - prior.mmse(rho, quad.order());
            mu1 = lambda * s2;  // mu* = lambda sigma*^2 for the Bayes rule
        } else {
            mu1 = lambda * quad.expect_joint(prior, mu, sg, [&](double v, double x) { return v * g.eval(x); }, g.kinks);
            s2 = quad.expect_joint(
                prior, mu, sg,
                [&](double, double x) {
                    const double y = g.eval(x);
                    return y * y;
                },
                g.kinks);
        }
        path.onsager_b.push_back(
            quad.expect_joint(prior, mu, sg, [&](double, double x) { return g.deriv(x); }, g.kinks));
        path.mu.push_back(mu1);
        path.sigma.push_back(std::sqrt(std::max(0.0, s2)));
    }
    for (std::size_t k = 0; k < path.mu.size(); ++k) {
        const double s = path.sigma[k];
        path.rho.push_back(s == 0.0 ? (path.mu[k] == 0.0 ? 0.0 : kInf) : (path.mu[k] / s) * (path.mu[k] / s));
    }
    return path;
}

double spiked_amse(const SEPath& se, double lambda, int k) {
    require(k + 1 < int(se.mu.size()), "spiked_amse: path too short");
    const double s = se.sigma[k + 1];
    return s * s - 2.0 * se.mu[k + 1] / lambda + 1.0;
}

double spiked_corr(const SEPath& se, double lambda, int k) {
    require(k + 1 < int(se.mu.size()), "spiked_corr: path too short");
    const double s = se.sigma[k + 1];
    return s > 0 ? std::abs(se.mu[k + 1]) / (lambda * s) : 0.0;
}

std::vector<double> power_linear_mu(double lambda, double mu0, int K) {
    require(mu0 != 0.0, "power_linear_mu: mu0 must be non-zero");
    std::vector<double> mu{mu0};
    for (int k = 0; k < K; ++k) mu.push_back(lambda / std::sqrt(1.0 + 1.0 / (mu.back() * mu.back())));
    return mu;
}

double bayes_map(const Prior& prior, double lambda, double rho, const GaussQuad& quad) {
    return lambda * lambda * (1.0 - prior.mmse(rho, quad.order()));
}

RhoFixedPoint rho_star(const Prior& prior, double lambda, double rho0, const GaussQuad& quad) {
    prior.require_unit_second_moment();
    require(lambda > 0 && rho0 >= 0, "rho_star: invalid arguments");
    RhoFixedPoint fp;
    double rho = rho0;
    fp.path.push_back(rho);
    if (rho0 == 0.0 && std::abs(prior.m1()) < 1e-15) {
        // Zero mean and zero start: the map stays at 0.
        fp.degenerate = true;
        fp.residual = std::abs(bayes_map(prior, lambda, 0.0, quad));
        return fp;
    }
    for (int it = 1; it <= 100000; ++it) {
        const double next = bayes_map(prior, lambda, rho, quad);
        fp.path.push_back(next);
        const double step = std::abs(next - rho);
        rho = next;
        fp.iterations = it;
        if (step < 1e-10) {
            // A few extra steps drive the residual well below the step tolerance.
            for (int j = 0; j < 50; ++j) {
                const double nn = bayes_map(prior, lambda, rho, quad);
                if (std::abs(nn - rho) < 1e-13) {
                    rho = nn;
                    break;
                }
                rho = nn;
            }
            fp.rho = rho;
            fp.residual = std::abs(rho - bayes_map(prior, lambda, rho, quad));
            fp.degenerate = rho < 1e-12;
            return fp;
        }
    }
    fail(ErrorKind::Solver, "rho_star: no convergence in 1e5 iterations");
}

// ---------------------------------------------------------------- rectangular

SEPath se_rect(const Prior& u_prior, const Prior& v_prior, double lambda, double delta, double mu0, double sigma0,
               const std::function<ScalarDenoiser(int, double, double)>& f,
               const std::function<ScalarDenoiser(int, double, double)>& g, int K, const GaussQuad& quad) {
    require(delta > 0 && K >= 1, "se_rect: invalid arguments");
    SEPath path;
    path.flavor = SEFlavor::Rect;
    path.mu = {mu0};
    path.sigma = {sigma0};
    for (int k = 0; k < K; ++k) {
        const ScalarDenoiser fk = f(k, path.mu[k], path.sigma[k]);
        const double ef = quad.expect_joint(v_prior, path.mu[k], path.sigma[k],
                                            [&](double v, double x) { return v * fk.eval(x); }, fk.kinks);
        const double ef2 = quad.expect_joint(
            v_prior, path.mu[k], path.sigma[k],
            [&](double, double x) {
                const double y = fk.eval(x);
                return y * y;
            },
            fk.kinks);
        const double mu_u = lambda / delta * ef, s_u = std::sqrt(ef2 / delta);
        path.muZ.push_back(mu_u);
        path.sigmaZ.push_back(s_u);
        const ScalarDenoiser gk = g(k, mu_u, s_u);
        const double eg = quad.expect_joint(u_prior, mu_u, s_u, [&](double u, double x) { return u * gk.eval(x); },
                                            gk.kinks);
        const double eg2 = quad.expect_joint(
            u_prior, mu_u, s_u,
            [&](double, double x) {
                const double y = gk.eval(x);
                return y * y;
            },
            gk.kinks);
        path.mu.push_back(lambda * eg);
        path.sigma.push_back(std::sqrt(eg2));
    }
    return path;
}

// ---------------------------------------------------------------- GAMP

Link Link::from_name(const std::string& name) {
    if (name == "linear") return linear();
    if (name == "logistic") return logistic();
    if (name == "phase_retrieval") return phase_retrieval();
    fail(ErrorKind::Config, "unknown link '" + name + "'");
}

std::string Link::name() const {
    switch (kind) {
        case Kind::Linear: return "linear";
        case Kind::Logistic: return "logistic";
        case Kind::PhaseRetrieval: return "phase_retrieval";
        case Kind::Custom: return "custom";
    }
    return "?";
}

double Link::operator()(double z, double eps) const {
    switch (kind) {
        case Kind::Linear: return z + eps;
        case Kind::Logistic: return eps <= zeta1(z) ? 1.0 : 0.0;
        case Kind::PhaseRetrieval: return z * z + eps;
        case Kind::Custom: return custom(z, eps);
    }
    return 0.0;
}

double gamp_expect(const Link& link, const Prior& noise, double s11, double muZ, double sigmaZ,
                   const std::function<double(double, double, double)>& fn, const GaussQuad& quad) {
    const double a = std::sqrt(s11);
    if (link.kind == Link::Kind::Logistic) {
        return quad.expect2([&](double u1, double u2) {
            const double z = a * u1, zk = muZ * z + sigmaZ * u2;
            const double p1 = zeta1(z);
            return p1 * fn(z, zk, 1.0) + (1.0 - p1) * fn(z, zk, 0.0);
        });
    }
    double total = 0.0;
    for (const auto& c : noise.convolved(0.0)) {
        auto with_eps = [&](double eps) {
            return quad.expect2([&](double u1, double u2) {
                const double z = a * u1, zk = muZ * z + sigmaZ * u2;
                return fn(z, zk, link(z, eps));
            });
        };
        if (c.sd == 0.0)
            total += c.weight * with_eps(c.mean);
        else
            total += c.weight * quad.expect([&](double u3) { return with_eps(c.mean + c.sd * u3); });
    }
    return total;
}

SEPath se_gamp(const Prior& prior, const Prior& noise, const Link& link, double delta, const std::vector<GampG>& g,
               const std::vector<GampF>& f, const Mat& Sigma0, int K, const GaussQuad& quad) {
    require(delta > 0 && K >= 1, "se_gamp: invalid arguments");
    require(int(g.size()) >= K && int(f.size()) >= K + 1, "se_gamp: need g_0..g_{K-1} and f_1..f_K");
    require(Sigma0.rows() == 2 && Sigma0.cols() == 2, "se_gamp: Sigma0 must be 2x2");
    const double m2 = prior.m2();
    require(std::abs(Sigma0(0, 0) - m2 / delta) <= 1e-8, "se_gamp: Sigma0(0,0) must equal E(beta^2)/delta");
    SEPath path;
    path.flavor = SEFlavor::Gamp;
    path.Sigma.push_back(Sigma0);
    path.mu.assign(K + 1, 0.0);
    path.sigma.assign(K + 1, 0.0);
    path.onsager_b.assign(K + 1, 0.0);
    path.onsager_c.assign(K + 1, 0.0);
    for (int k = 0; k < K; ++k) {
        const Mat& S = path.Sigma[k];
        const double s11 = S(0, 0), s12 = 0.5 * (S(0, 1) + S(1, 0)), s22 = S(1, 1);
        const double det = s11 * s22 - s12 * s12;
        if (!(s11 > 0) || det < -1e-12 * std::max(1.0, s11 * s22))
            fail(ErrorKind::Degenerate, "se_gamp: Sigma_" + std::to_string(k) + " is not positive semidefinite");
        const double muZ = s12 / s11;
        const double sZ = std::sqrt(std::max(0.0, s22 - s12 * s12 / s11));
        path.muZ.push_back(muZ);
        path.sigmaZ.push_back(sZ);
        const GampG& gk = g[k];
        const double ezg = gamp_expect(link, noise, s11, muZ, sZ,
                                       [&](double z, double zk, double y) { return z * gk.eval(zk, y); }, quad);
        const double edg =
            gamp_expect(link, noise, s11, muZ, sZ, [&](double, double zk, double y) { return gk.du(zk, y); }, quad);
        const double eg2 = gamp_expect(
            link, noise, s11, muZ, sZ,
            [&](double, double zk, double y) {
                const double v = gk.eval(zk, y);
                return v * v;
            },
            quad);
        // Stein's lemma turns E d/dz g(Z, Z_k, eps) into moments of g.
        const double mu1 = ezg / s11 - muZ * edg;
        const double s1 = std::sqrt(std::max(0.0, eg2));
        path.mu[k + 1] = mu1;
        path.sigma[k + 1] = s1;
        path.onsager_c[k] = edg;
        const GampF& fk = f[k + 1];
        const double ebf =
            quad.expect_joint(prior, mu1, s1, [&](double b, double x) { return b * fk.eval(x); }, fk.kinks);
        const double ef2 = quad.expect_joint(
            prior, mu1, s1,
            [&](double, double x) {
                const double v = fk.eval(x);
                return v * v;
            },
            fk.kinks);
        path.onsager_b[k + 1] =
            quad.expect_joint(prior, mu1, s1, [&](double, double x) { return fk.deriv(x); }, fk.kinks) / delta;
        Mat S1(2, 2);
        S1 << m2, ebf, ebf, ef2;
        path.Sigma.push_back(S1 / delta);
    }
    return path;
}

SEPath se_linear(const Prior& prior, double noise_var, double delta, double sigma1, const std::vector<GampF>& f,
                 int K, const GaussQuad& quad) {
    require(delta > 0 && noise_var >= 0 && sigma1 > 0 && K >= 1, "se_linear: invalid arguments");
    require(int(f.size()) >= K, "se_linear: need f_1..f_{K-1}");
    SEPath path;
    path.flavor = SEFlavor::Linear;
    path.sigma.assign(K + 1, 0.0);
    path.mu.assign(K + 1, 1.0);
    path.mu[0] = 0.0;
    path.sigma[1] = sigma1;
    for (int k = 1; k < K; ++k) {
        const GampF& fk = f[k];
        const double e = quad.expect_joint(
            prior, 1.0, path.sigma[k],
            [&](double b, double x) {
                const double d = b - fk.eval(x);
                return d * d;
            },
            fk.kinks);
        path.sigma[k + 1] = std::sqrt(noise_var + e / delta);
    }
    return path;
}

// ---------------------------------------------------------------- Lasso

double upsilon(double a) { return (1 + a * a) * normal_cdf(-a) - a * normal_pdf(a); }

double lasso_mse(const Prior& prior, double s, double t, const GaussQuad& quad) {
    return quad.expect_joint(
        prior, 1.0, s,
        [t](double b, double x) {
            const double st = std::abs(x) > t ? x - std::copysign(t, x) : 0.0;
            return (b - st) * (b - st);
        },
        {-t, t});
}

double lasso_active(const Prior& prior, double s, double t, const GaussQuad&) {
    double p = 0.0;
    for (const auto& c : prior.convolved(s)) {
        if (c.sd == 0.0) {
            p += c.weight * (std::abs(c.mean) > t ? 1.0 : 0.0);
            continue;
        }
        p += c.weight * (normal_cdf((-t - c.mean) / c.sd) + normal_cdf((c.mean - t) / c.sd));
    }
    return p;
}

double lasso_sigma_alpha(double alpha, double delta, double sigma, const Prior& prior, const GaussQuad& quad) {
    auto rhs = [&](double s2) {
        const double s = std::sqrt(s2);
        return sigma * sigma + lasso_mse(prior, s, alpha * s, quad) / delta;
    };
    double s2 = sigma * sigma + prior.m2() / delta;
    for (int it = 0; it < 20000; ++it) {
        const double next = 0.5 * s2 + 0.5 * rhs(s2);
        if (!std::isfinite(next)) break;
        const bool done = std::abs(next - s2) <= 1e-15 * std::max(1.0, s2);
        s2 = next;
        if (done) return std::sqrt(s2);
    }
    // Slow contraction (alpha close to alpha_0): bracket and bisect h(s2) = rhs(s2) - s2.
    double lo = sigma * sigma, hi = std::max(2.0 * lo, 1.0);
    while (rhs(hi) - hi > 0) {
        hi *= 2;
        if (hi > 1e30) fail(ErrorKind::Solver, "lasso_sigma_alpha: no fixed point (alpha below alpha_0?)");
    }
    while (hi - lo > 1e-15 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (rhs(mid) - mid > 0)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(0.5 * (lo + hi));
}

double lasso_Lambda(double alpha, double delta, double sigma, const Prior& prior, const GaussQuad& quad) {
    const double s = lasso_sigma_alpha(alpha, delta, sigma, prior, quad);
    return alpha * s * (1.0 - lasso_active(prior, s, alpha * s, quad) / delta);
}

nlohmann::json LassoFixedPoint::to_json() const {
    return {{"lambda", lambda},       {"alpha", alpha},         {"alpha0", alpha0},
            {"sigma", sigma},         {"t", t},                 {"btilde", btilde},
            {"active", active},       {"res_sigma", res_sigma}, {"res_t", res_t},
            {"res_lambda", res_lambda}, {"iterations", iterations}};
}

LassoFixedPoint lasso_calibration(double lambda, double delta, double sigma, const Prior& prior,
                                  const GaussQuad& quad) {
    require(lambda > 0 && delta > 0 && sigma > 0, "lasso_calibration: parameters must be positive");
    LassoFixedPoint fp;
    fp.lambda = lambda;
    // alpha_0: boundary of upsilon(alpha) < delta/2 (upsilon decreases from 1/2).
    if (delta / 2 > upsilon(0.0)) {
        fp.alpha0 = 0.0;
    } else {
        double lo = 0.0, hi = 1.0;
        while (upsilon(hi) >= delta / 2) hi *= 2;
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            (upsilon(mid) >= delta / 2 ? lo : hi) = mid;
        }
        fp.alpha0 = hi;
    }
    auto Lam = [&](double a) { return lasso_Lambda(a, delta, sigma, prior, quad); };
    double hi = std::max(fp.alpha0 + 1.0, 2.0);
    double Lhi = Lam(hi);
    for (int i = 0; Lhi <= lambda; ++i) {
        if (i > 60) fail(ErrorKind::Solver, "lasso_calibration: cannot bracket Lambda(alpha) = lambda from above");
        hi *= 2, Lhi = Lam(hi);
    }
    double lo = fp.alpha0 + 0.5 * (hi - fp.alpha0);
    double Llo = Lam(lo);
    for (int i = 0; Llo >= lambda; ++i) {
        if (i > 60)
            fail(ErrorKind::Solver, "lasso_calibration: cannot bracket Lambda(alpha) = lambda from below (Lambda=" +
                                        std::to_string(Llo) + ")");
        lo = fp.alpha0 + 0.5 * (lo - fp.alpha0), Llo = Lam(lo);
    }
    int it = 0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (Lam(mid) < lambda ? lo : hi) = mid;
        ++it;
    }
    fp.iterations = it;
    fp.alpha = 0.5 * (lo + hi);
    fp.sigma = lasso_sigma_alpha(fp.alpha, delta, sigma, prior, quad);
    fp.t = fp.alpha * fp.sigma;
    fp.active = lasso_active(prior, fp.sigma, fp.t, quad);
    fp.btilde = fp.active / delta;
    fp.res_sigma = std::abs(fp.sigma * fp.sigma - sigma * sigma - lasso_mse(prior, fp.sigma, fp.t, quad) / delta);
    fp.res_t = std::abs(fp.t - lambda / (1.0 - fp.btilde));
    fp.res_lambda = std::abs(fp.t * (1.0 - fp.btilde) - lambda);
    return fp;
}

SEPath se_lasso(const Prior& prior, double delta, double sigma, double alpha, int K, const GaussQuad& quad) {
    require(delta > 0 && sigma > 0 && alpha > 0 && K >= 1, "se_lasso: invalid arguments");
    SEPath path;
    path.flavor = SEFlavor::Lasso;
    path.sigma.assign(K + 1, 0.0);
    path.threshold.assign(K + 1, 0.0);
    path.onsager_b.assign(K + 1, 0.0);
    path.mu.assign(K + 1, 1.0);
    path.sigma[1] = std::sqrt(sigma * sigma + prior.m2() / delta);
    for (int k = 1; k <= K; ++k) {
        const double s = path.sigma[k], t = alpha * s;
        path.threshold[k] = t;
        path.onsager_b[k] = lasso_active(prior, s, t, quad) / delta;
        if (k < K) path.sigma[k + 1] = std::sqrt(sigma * sigma + lasso_mse(prior, s, t, quad) / delta);
    }
    return path;
}

// ---------------------------------------------------------------- M-estimation

double mest_F(const Loss& loss, const Prior& noise, double tau, double b, const GaussQuad& quad) {
    return quad.expect_marginal(
        noise, 1.0, tau, [&](double x) { return moreau_score(loss, b, x).second; }, prox_breaks(loss, b));
}

double mest_S2(const Loss& loss, const Prior& noise, double tau, double b, const GaussQuad& quad) {
    return quad.expect_marginal(
        noise, 1.0, tau,
        [&](double x) {
            const double s = moreau_score(loss, b, x).first;
            return s * s;
        },
        prox_breaks(loss, b));
}

nlohmann::json MestFixedPoint::to_json() const {
    return {{"tau", tau},     {"tau2", tau * tau},   {"b", b},
            {"mse", mse()},   {"res_b", res_b},      {"res_tau", res_tau},
            {"delta", delta}, {"iterations", iterations}};
}

namespace {
double mest_b_of_tau(const Loss& loss, const Prior& noise, double delta, double tau, const GaussQuad& quad) {
    // F_tau(b) increases from 0 to 1; bracketed root in log b.
    auto h = [&](double lb) { return delta * mest_F(loss, noise, tau, std::exp(lb), quad) - 1.0; };
    double lo = std::log(1e-12), hi = std::log(1e12);
    const double hlo = h(lo), hhi = h(hi);
    if (!(hlo < 0 && hhi > 0)) fail(ErrorKind::Solver, "mest_fixed_point: cannot bracket delta E S_b' = 1");
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        h, lo, hi, hlo, hhi, [](double a, double b) { return std::abs(b - a) <= 1e-14; }, iters);
    if (iters >= 200) fail(ErrorKind::Solver, "mest_fixed_point: root search for b did not converge");
    return std::exp(0.5 * (r.first + r.second));
}
}  // namespace

MestFixedPoint mest_fixed_point(const Loss& loss, const Prior& noise, double delta, const GaussQuad& quad) {
    if (!(delta > 1)) fail(ErrorKind::Precondition, "mest_fixed_point: delta must exceed 1");
    MestFixedPoint fp;
    fp.delta = delta;
    double tau = std::max(std::sqrt(noise.m2()), 0.1);
    double b = 1.0;
    for (int it = 1; it <= 10000; ++it) {
        b = mest_b_of_tau(loss, noise, delta, tau, quad);
        const double t2 = delta * mest_S2(loss, noise, tau, b, quad);
        const double next = std::sqrt(t2);
        const bool done = std::abs(t2 - tau * tau) <= 1e-14 * std::max(1.0, t2);
        tau = next;
        fp.iterations = it;
        if (done) break;
        if (it == 10000) fail(ErrorKind::Solver, "mest_fixed_point: no convergence");
    }
    fp.b = mest_b_of_tau(loss, noise, delta, tau, quad);
    fp.tau = tau;
    fp.res_b = std::abs(delta * mest_F(loss, noise, tau, fp.b, quad) - 1.0);
    fp.res_tau = std::abs(tau * tau - delta * mest_S2(loss, noise, tau, fp.b, quad));
    return fp;
}

double fisher_information(const Prior& noise, const GaussQuad& quad) {
    const auto comps = noise.convolved(0.0);
    for (const auto& c : comps)
        if (c.sd == 0.0) return kInf;
    if (comps.size() == 1) return 1.0 / (comps[0].sd * comps[0].sd);
    auto score = [&](double x) {
        double p = 0.0, dp = 0.0;
        for (const auto& c : comps) {
            const double z = (x - c.mean) / c.sd;
            const double d = c.weight * normal_pdf(z) / c.sd;
            p += d;
            dp += -d * z / c.sd;
        }
        return dp / p;
    };
    double I = 0.0;
    for (const auto& c : comps)
        I += c.weight * quad.expect([&](double u) {
            const double s = score(c.mean + c.sd * u);
            return s * s;
        });
    return I;
}

// ---------------------------------------------------------------- logistic

nlohmann::json LogisticFixedPoint::to_json() const {
    return {{"mu", mu},         {"sigma", sigma}, {"b", b},
            {"kappa2", kappa2}, {"delta", delta}, {"residual", residual},
            {"iterations", iterations}};
}

LogisticMoments logistic_moments(double kappa2, double delta, double mu, double sigma, double b,
                                 const GaussQuad& quad) {
    require(kappa2 > 0 && delta > 0 && b > 0 && sigma >= 0, "logistic_moments: invalid arguments");
    const double kap = std::sqrt(kappa2), sd = sigma / std::sqrt(delta);
    LogisticMoments m{0, 0, 0};
    const auto& x = quad.nodes();
    const auto& w = quad.weights();
    const int N = quad.order();
    for (int i = 0; i < N; ++i) {
        const double z = kap * x[i];
        const double p1 = zeta1(z);
        for (int j = 0; j < N; ++j) {
            const double zk = mu * z + sd * x[j];
            const double ww = w[i] * w[j];
            for (int y = 0; y <= 1; ++y) {
                const double py = y ? p1 : 1.0 - p1;
                const double p = prox_zeta(b, zk + b * y);
                const double r = y - zeta1(p);
                m.A += ww * py / (1.0 + b * zeta2(p));
                m.Bz += ww * py * z * r;
                m.C += ww * py * r * r;
            }
        }
    }
    return m;
}

Eigen::Vector3d logistic_residuals(double kappa2, double delta, double mu, double sigma, double b,
                                   const GaussQuad& quad) {
    const LogisticMoments m = logistic_moments(kappa2, delta, mu, sigma, b, quad);
    return {sigma * sigma - delta * delta * b * b * m.C, m.Bz, (1.0 - 1.0 / delta) - m.A};
}

Eigen::Vector3d logistic_se_step(double kappa2, double delta, double mu, double sigma, double b,
                                 const GaussQuad& quad) {
    const LogisticMoments m = logistic_moments(kappa2, delta, mu, sigma, b, quad);
    const double b1 = (b / delta) / (1.0 - m.A);
    const double m2 = delta * kappa2;
    const double mu1 = delta * delta * b1 / m2 * m.Bz + mu;
    const double s1 = delta * b1 * std::sqrt(m.C);
    return {mu1, s1, b1};
}

LogisticFixedPoint logistic_fixed_point(double kappa2, double delta, const GaussQuad& quad) {
    if (!(delta > 1)) fail(ErrorKind::Precondition, "logistic_fixed_point: delta must exceed 1");
    require(kappa2 > 0, "logistic_fixed_point: kappa2 must be positive");
    LogisticFixedPoint fp;
    fp.kappa2 = kappa2, fp.delta = delta;
    Eigen::Vector3d x(1.0, 1.0, 1.0);
    auto bad = [](const Eigen::Vector3d& v) { return !v.allFinite() || v[1] <= 0 || v[2] <= 0 || v.cwiseAbs().maxCoeff() > 1e6; };
    int it = 0;
    // Damped state-evolution iteration brings the iterate into Newton's basin.
    for (; it < 3000; ++it) {
        const Eigen::Vector3d step = logistic_se_step(kappa2, delta, x[0], x[1], x[2], quad);
        if (bad(step)) fail(ErrorKind::Solver, "logistic_fixed_point: no fixed point found (iteration diverged)");
        const Eigen::Vector3d next = 0.5 * x + 0.5 * step;
        const double change = (next - x).cwiseAbs().maxCoeff();
        x = next;
        if (change < 1e-7) break;
    }
    auto res = [&](const Eigen::Vector3d& v) { return logistic_residuals(kappa2, delta, v[0], v[1], v[2], quad); };
    Eigen::Vector3d r = res(x);
    for (int nt = 0; nt < 50 && r.norm() > 1e-12; ++nt, ++it) {
        Eigen::Matrix3d J;
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d xp = x, xm = x;
            const double h = 1e-6 * std::max(1.0, std::abs(x[c]));
            xp[c] += h, xm[c] -= h;
            J.col(c) = (res(xp) - res(xm)) / (2 * h);
        }
        Eigen::Vector3d dx = J.colPivHouseholderQr().solve(-r);
        double step = 1.0;
        Eigen::Vector3d xn = x + dx, rn;
        for (int ls = 0; ls < 30; ++ls) {
            xn = x + step * dx;
            if (!bad(xn)) {
                rn = res(xn);
                if (rn.norm() < r.norm()) break;
            }
            step *= 0.5;
        }
        if (bad(xn)) fail(ErrorKind::Solver, "logistic_fixed_point: no fixed point found (Newton left the domain)");
        if (!(rn.norm() < r.norm())) break;
        x = xn, r = rn;
    }
    fp.mu = x[0], fp.sigma = x[1], fp.b = x[2];
    fp.residual = r.cwiseAbs().maxCoeff();
    fp.iterations = it;
    if (!(fp.residual < 1e-8))
        fail(ErrorKind::Solver, "logistic_fixed_point: no fixed point found (residual stalled at " +
                                    std::to_string(fp.residual) + ")");
    return fp;
}

}  // namespace amp
