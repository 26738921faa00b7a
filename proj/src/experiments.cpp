#include "amp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <thread>

#include "amp/amp_core.hpp"
#include "amp/ensembles.hpp"
#include "amp/gamp.hpp"
#include "amp/metrics.hpp"
#include "amp/se.hpp"
#include "amp/spiked.hpp"

namespace amp {

using json = nlohmann::json;

std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

constexpr int kSchemaVersion = 1;
const double kNA = std::numeric_limits<double>::quiet_NaN();

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// ---- configuration access; every failure is a config error ----

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
    fail(ErrorKind::Config, "config: '" + key + "' " + what);
}

const json& field(const json& c, const std::string& key) {
    const auto it = c.find(key);
    if (it == c.end()) bad_key(key, "is missing");
    return *it;
}

double num(const json& c, const std::string& key) {
    const json& v = field(c, key);
    if (!v.is_number()) bad_key(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad_key(key, "must be finite");
    return x;
}

double positive(const json& c, const std::string& key) {
    const double x = num(c, key);
    if (!(x > 0)) bad_key(key, "must be positive");
    return x;
}

int integer(const json& c, const std::string& key, int lo) {
    const json& v = field(c, key);
    if (!v.is_number_integer()) bad_key(key, "must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > 1000000000LL) bad_key(key, "must be at least " + std::to_string(lo));
    return int(x);
}

bool flag(const json& c, const std::string& key) {
    const json& v = field(c, key);
    if (!v.is_boolean()) bad_key(key, "must be true or false");
    return v.get<bool>();
}

std::string text(const json& c, const std::string& key, const std::vector<std::string>& allowed) {
    const json& v = field(c, key);
    if (!v.is_string()) bad_key(key, "must be a string");
    const std::string s = v.get<std::string>();
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
        std::string opts;
        for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
        bad_key(key, "must be one of: " + opts);
    }
    return s;
}

std::vector<double> num_list(const json& c, const std::string& key) {
    const json& v = field(c, key);
    if (!v.is_array()) bad_key(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) bad_key(key, "must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

// Parses a law and maps construction errors to config errors.
Prior law(const json& c, const std::string& key) {
    try {
        return Prior::from_json(field(c, key));
    } catch (const AmpError& e) {
        bad_key(key, std::string("is not a valid law: ") + e.what());
    } catch (const json::exception& e) {
        bad_key(key, std::string("is not a valid law: ") + e.what());
    }
}

Prior unit_law(const json& c, const std::string& key) {
    const Prior p = law(c, key);
    if (std::abs(p.m2() - 1.0) > 1e-8) bad_key(key, "must have unit second moment");
    return p;
}

Loss loss_of(const json& c, const std::string& key) {
    try {
        return Loss::from_json(field(c, key));
    } catch (const AmpError& e) {
        bad_key(key, std::string("is not a valid loss: ") + e.what());
    } catch (const json::exception& e) {
        bad_key(key, std::string("is not a valid loss: ") + e.what());
    }
}

// ---- replicate pool ----

int worker_count(const json& cfg) {
    int t = integer(cfg, "threads", 0);
    if (t == 0) {
        if (const char* env = std::getenv("AMP_THREADS")) t = std::atoi(env);
        if (t <= 0) t = int(std::thread::hardware_concurrency());
    }
    return std::max(1, t);
}

// Runs fn(0..reps-1) on a pool; results are stored by replicate index, so the order of completion is irrelevant.
template <class R>
std::vector<R> replicates(int reps, int threads, const std::function<R(int)>& fn) {
    std::vector<std::optional<R>> slot(reps);
    std::vector<std::exception_ptr> err(reps);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i; (i = next++) < reps;) {
            try {
                slot[i] = fn(i);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    const int t = std::min(threads, reps);
    if (t <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < t; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : err)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    for (auto& s : slot) out.push_back(std::move(*s));
    return out;
}

struct Acc {
    std::vector<double> v;
    void add(double x) { v.push_back(x); }
    double mean() const {
        double s = 0;
        for (double x : v) s += x;
        return v.empty() ? kNA : s / double(v.size());
    }
    double sd() const {
        const double m = mean();
        if (v.size() < 2 || std::isnan(m)) return v.empty() ? kNA : (std::isnan(m) ? kNA : 0.0);
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / double(v.size() - 1));
    }
};

// ---- output assembly ----

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}
    // Unlisted columns are filled with "n/a".
    void add(const std::map<std::string, std::string>& cells) {
        std::vector<std::string> row(columns.size(), "n/a");
        for (const auto& [k, v] : cells) {
            const auto it = std::find(columns.begin(), columns.end(), k);
            if (it == columns.end()) fail(ErrorKind::Precondition, "internal: unknown column " + k);
            row[it - columns.begin()] = v;
        }
        rows.push_back(std::move(row));
    }
};

std::string cell(double x) { return std::isnan(x) ? "n/a" : fmt17(x); }
std::string cell(int x) { return std::to_string(x); }

struct Checks {
    json j = json::object();
    bool ok = true;
    void add(const std::string& name, double value, double bound, bool pass) {
        j[name] = {{"value", std::isfinite(value) ? json(value) : json(fmt17(value))}, {"bound", bound}, {"pass", pass}};
        ok = ok && pass;
    }
};

struct Output {
    Table table;
    json summary = json::object();
    Checks checks;
};

// Gaussianity battery for a residual x ~ N(0, tau^2) independent of y ~ prior.
json battery(Table& t, const Vec& x, const Vec& y, double tau, const Prior& prior, int k) {
    json out = json::object();
    double worst = 0;
    for (const auto& d : pl_battery_report(x, y, tau, prior)) {
        t.add({{"panel", "battery"}, {"k", cell(k)}, {"test", d.name}, {"pl_emp", cell(d.empirical)}, {"pl_se", cell(d.reference)}});
        out[d.name] = {{"empirical", d.empirical}, {"reference", d.reference}};
        worst = std::max(worst, d.deviation);
    }
    out["max_deviation"] = worst;
    out["w2_normal"] = w2_normal(x, 0.0, tau);
    return out;
}

// ---------------------------------------------------------------- spiked

SpikedPolicy policy_of(const json& cfg) {
    const std::string p = text(cfg, "policy", {"bayes", "soft_threshold", "power_linear"});
    if (p == "soft_threshold") return SpikedPolicy::soft_threshold(positive(cfg, "st_factor"));
    if (p == "power_linear") return SpikedPolicy::power_linear();
    return SpikedPolicy::bayes();
}

void exp_spiked(const json& cfg, std::uint64_t seed, Output& o) {
    const Prior prior = unit_law(cfg, "prior");
    const double lambda = positive(cfg, "lambda");
    const int n = integer(cfg, "n", 10), K = integer(cfg, "K", 1), reps = integer(cfg, "replicates", 1);
    const double tol = positive(cfg, "tolerance"), slack = num(cfg, "monotone_slack");
    const SpikedPolicy policy = policy_of(cfg);
    const std::string init = text(cfg, "init", {"spectral", "constant", "oracle"});
    const bool empirical = text(cfg, "params", {"state_evolution", "empirical"}) == "empirical";
    const int threads = worker_count(cfg);

    SpikedRunOptions opt;
    opt.K = K;
    opt.policy = policy;
    opt.params = empirical ? ParamSource::Empirical : ParamSource::StateEvolution;
    double mu0 = 0, sigma0 = 0;
    if (init == "spectral") {
        const double c = num(cfg, "init_c");
        if (c == 0.0) bad_key("init_c", "must be non-zero for spectral init");
        if (!(lambda > 1)) bad_key("lambda", "must exceed 1 for spectral init");
        opt.init = InitSpec::spectral(c);
        mu0 = c * std::sqrt(1 - 1 / (lambda * lambda)), sigma0 = std::abs(c) / lambda;
    } else if (init == "constant") {
        opt.init = InitSpec::constant(num(cfg, "init_c"));
    } else {
        mu0 = num(cfg, "oracle_mu0"), sigma0 = positive(cfg, "oracle_sigma0");
        opt.init = InitSpec::oracle(mu0, sigma0);
    }
    const SEPath se = se_spiked(prior, lambda, mu0, sigma0, policy, K);

    struct Rep {
        std::vector<double> mse, corr;
    };
    const auto res = replicates<Rep>(reps, threads, [&](int r) {
        RngStream rng(seed, r);
        const SpikedInstance inst = sample_spiked(prior, lambda, n, rng);
        const SpikedRun run = run_spiked(inst, prior, opt, rng);
        Rep out;
        for (int k = 0; k < K; ++k) {
            const RiskMetrics m = risk_metrics(run.run.vhat[k], inst.v);
            out.mse.push_back(m.mse_signmin);
            out.corr.push_back(m.correlation_abs.value_or(0.0));
        }
        return out;
    });

    Table& t = o.table;
    double worst_mse = 0, worst_corr = 0, worst_rise = 0, prev = kNA;
    for (int k = 0; k < K; ++k) {
        Acc mse, corr;
        for (const auto& r : res) mse.add(r.mse[k]), corr.add(r.corr[k]);
        const double mse_se = spiked_amse(se, lambda, k), corr_se = spiked_corr(se, lambda, k);
        t.add({{"panel", "iteration"}, {"k", cell(k)}, {"lambda", cell(lambda)}, {"amse_emp", cell(mse.mean())},
               {"amse_emp_sd", cell(mse.sd())}, {"amse_se", cell(mse_se)}, {"corr_emp", cell(corr.mean())},
               {"corr_emp_sd", cell(corr.sd())}, {"corr_se", cell(corr_se)}});
        worst_mse = std::max(worst_mse, std::abs(mse.mean() - mse_se));
        worst_corr = std::max(worst_corr, std::abs(corr.mean() - corr_se));
        if (k) worst_rise = std::max(worst_rise, mse.mean() - prev);
        prev = mse.mean();
    }
    o.checks.add("max_abs_amse_deviation", worst_mse, tol, worst_mse <= tol);
    o.checks.add("max_abs_corr_deviation", worst_corr, tol, worst_corr <= tol);
    o.checks.add("max_amse_rise", worst_rise, slack, worst_rise <= slack);
    o.summary["state_evolution"] = se.to_json();

    // Limiting AMP error against the pilot spectral estimator over a lambda grid (Bayes policy only).
    const std::vector<double> grid = num_list(cfg, "lambda_grid");
    if (grid.empty() || policy.kind != SpikedPolicy::Kind::Bayes) return;
    const int gn = integer(cfg, "grid_n", 10), greps = integer(cfg, "grid_replicates", 1);
    bool dominated = true, equal_below = true;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const double l = grid[gi];
        if (!(l > 0)) bad_key("lambda_grid", "entries must be positive");
        const bool above = l > 1;
        // Spectral start above the transition, uninformative start below it.
        const RhoFixedPoint fp = rho_star(prior, l, above ? l * l - 1 : 0.0);
        const double amse_inf = 1 - fp.rho / (l * l);
        const double pilot_opt = std::min(1.0, 1 / (l * l));
        const double pilot_caption = std::max(1.0, 1 / (l * l));
        dominated = dominated && amse_inf <= pilot_opt + 1e-9;
        if (!above && std::abs(prior.m1()) < 1e-15) equal_below = equal_below && std::abs(amse_inf - pilot_opt) <= 1e-9;

        struct GRep {
            double amp = kNA, pilot_opt = kNA, pilot_caption = kNA;
        };
        const auto gres = replicates<GRep>(greps, threads, [&](int r) {
            RngStream rng(seed, 1000000 + 1000 * gi + r);
            const SpikedInstance inst = sample_spiked(prior, l, gn, rng);
            GRep out;
            const EigenPair ep = leading_eigenpair(inst.A, {}, &inst.v);
            const double c = std::abs(risk_metrics(ep.vector, inst.v).correlation.value_or(0.0));
            out.pilot_opt = 1 - c * c;
            if (above) {
                // Caption normalisation ||phi|| = sqrt(n lambda^2 (lambda^2 - 1)), estimate phi / lambda.
                const Vec pilot = std::sqrt(l * l - 1) * ep.vector;
                out.pilot_caption = risk_metrics(pilot, inst.v).mse_signmin;
                SpikedRunOptions go = opt;
                go.init = InitSpec::spectral(1.0);
                const SpikedRun run = run_spiked(inst, prior, go, rng);
                out.amp = risk_metrics(run.run.vhat[K - 1], inst.v).mse_signmin;
            }
            return out;
        });
        Acc amp, po, pc;
        for (const auto& r : gres) amp.add(r.amp), po.add(r.pilot_opt), pc.add(r.pilot_caption);
        const double amse_k = above ? spiked_amse(se_spiked(prior, l, std::sqrt(1 - 1 / (l * l)), 1 / l, policy, K), l, K - 1)
                                    : kNA;
        t.add({{"panel", "lambda_grid"}, {"k", cell(K - 1)}, {"lambda", cell(l)}, {"amse_emp", cell(amp.mean())},
               {"amse_emp_sd", cell(amp.sd())}, {"amse_se", cell(amse_k)}, {"amse_inf_se", cell(amse_inf)},
               {"pilot_opt_emp", cell(po.mean())}, {"pilot_opt_se", cell(pilot_opt)},
               {"pilot_caption_emp", cell(pc.mean())}, {"pilot_caption_formula", cell(pilot_caption)}});
    }
    o.checks.add("amp_limit_below_pilot", dominated ? 0.0 : 1.0, 0.0, dominated);
    o.checks.add("amp_limit_equals_pilot_below_transition", equal_below ? 0.0 : 1.0, 0.0, equal_below);
}

// ---------------------------------------------------------------- bbp

void exp_bbp(const json& cfg, std::uint64_t seed, Output& o) {
    const Prior prior = unit_law(cfg, "prior");
    const std::vector<double> grid = num_list(cfg, "lambda_grid");
    const int n = integer(cfg, "n", 10), reps = integer(cfg, "replicates", 1);
    const double tol_eig = positive(cfg, "tolerance_eigenvalue"), tol_corr = positive(cfg, "tolerance_corr");
    const double null_max = positive(cfg, "null_corr_max"), margin = num(cfg, "check_margin");
    const int threads = worker_count(cfg);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const double l = grid[gi];
        if (!(l >= 0)) bad_key("lambda_grid", "entries must be non-negative");
        struct Rep {
            double ev, corr;
        };
        const auto res = replicates<Rep>(reps, threads, [&](int r) {
            RngStream rng(seed, 1000 * gi + r);
            const SpikedInstance inst = sample_spiked(prior, l, n, rng);
            const EigenPair ep = leading_eigenpair(inst.A, {}, &inst.v);
            return Rep{ep.value, std::abs(risk_metrics(ep.vector, inst.v).correlation.value_or(0.0))};
        });
        Acc ev, corr;
        for (const auto& r : res) ev.add(r.ev), corr.add(r.corr);
        const double ev_pred = l > 1 ? l + 1 / l : 2.0, corr_pred = l > 1 ? std::sqrt(1 - 1 / (l * l)) : 0.0;
        const bool checked = l >= 1 + margin || l <= 1 - margin;
        o.table.add({{"panel", "lambda_grid"}, {"lambda", cell(l)}, {"lambda1_emp", cell(ev.mean())},
                     {"lambda1_emp_sd", cell(ev.sd())}, {"lambda1_se", cell(ev_pred)}, {"corr_emp", cell(corr.mean())},
                     {"corr_emp_sd", cell(corr.sd())}, {"corr_se", cell(corr_pred)}, {"checked", cell(int(checked))}});
        if (!checked) continue;
        const std::string tag = "lambda=" + fmt17(l);
        const double de = std::abs(ev.mean() - ev_pred);
        o.checks.add(tag + "/eigenvalue", de, tol_eig, de <= tol_eig);
        if (l > 1) {
            const double dc = std::abs(corr.mean() - corr_pred);
            o.checks.add(tag + "/corr", dc, tol_corr, dc <= tol_corr);
        } else {
            o.checks.add(tag + "/corr", corr.mean(), null_max, corr.mean() <= null_max);
        }
    }
}

// ---------------------------------------------------------------- lasso

void exp_lasso(const json& cfg, std::uint64_t seed, Output& o) {
    const Prior prior = law(cfg, "prior");
    const double delta = positive(cfg, "delta"), sigma = positive(cfg, "sigma"), lambda = positive(cfg, "lambda");
    const int n = integer(cfg, "n", 10), K = integer(cfg, "K", 1), reps = integer(cfg, "replicates", 1);
    const bool stationary = flag(cfg, "stationary");
    const double tol_risk = positive(cfg, "tolerance_risk_rel"), tol_active = positive(cfg, "tolerance_active");
    const double tol_cd = positive(cfg, "tolerance_amp_cd"), tol_res = positive(cfg, "tolerance_residual");
    const int p = int(std::lround(n / delta));
    if (p < 1) bad_key("delta", "gives an empty design");
    const int threads = worker_count(cfg);

    const GaussQuad quad;
    const LassoFixedPoint fp = lasso_calibration(lambda, double(n) / p, sigma, prior, quad);
    const double dd = double(n) / p;
    std::vector<double> s_se(K + 1, fp.sigma), t_se(K + 1, fp.t);
    if (!stationary) {
        const SEPath se = se_lasso(prior, dd, sigma, fp.alpha, K, quad);
        s_se = se.sigma, t_se = se.threshold;
    }
    const Prior noise = Prior::gaussian(0.0, sigma);

    struct Rep {
        std::vector<double> mse, active, sig;
        double cd_risk, cd_active, dist, kkt;
        Vec x, beta;
    };
    const auto res = replicates<Rep>(reps, threads, [&](int r) {
        RngStream rng(seed, r);
        const GlmInstance inst = sample_glm(prior, noise, Link::linear(), n, p, rng);
        const EstimatorResult cd = lasso_reference(inst.X, inst.y, lambda);
        const LassoAmpResult amp = lasso_amp(inst, prior, sigma, lambda, K, stationary, rng, quad);
        Rep out;
        for (int k = 1; k <= K; ++k) {
            out.mse.push_back(amp.run.trace.at("mse")[k]);
            out.active.push_back(amp.run.trace.at("active")[k]);
            out.sig.push_back(amp.run.trace.at("sigma_hat")[k]);
        }
        out.cd_risk = (cd.beta_hat - inst.beta).squaredNorm() / p;
        out.cd_active = double((cd.beta_hat.array() != 0.0).count()) / p;
        out.dist = (amp.run.betahat[K] - cd.beta_hat).squaredNorm() / p;
        out.kkt = cd.kkt;
        if (r == 0) out.x = amp.run.beta[K] - inst.beta, out.beta = inst.beta;
        return out;
    });

    Table& t = o.table;
    for (int k = 1; k <= K; ++k) {
        Acc mse, act, sig;
        for (const auto& r : res) mse.add(r.mse[k - 1]), act.add(r.active[k - 1]), sig.add(r.sig[k - 1]);
        t.add({{"panel", "iteration"}, {"k", cell(k)}, {"mse_emp", cell(mse.mean())}, {"mse_emp_sd", cell(mse.sd())},
               {"mse_se", cell(lasso_mse(prior, s_se[k], t_se[k], quad))}, {"active_emp", cell(act.mean())},
               {"active_emp_sd", cell(act.sd())}, {"active_se", cell(lasso_active(prior, s_se[k], t_se[k], quad))},
               {"sigma_emp", cell(sig.mean())}, {"sigma_emp_sd", cell(sig.sd())}, {"sigma_se", cell(s_se[k])}});
    }
    Acc risk, active, dist;
    double kkt = 0;
    for (const auto& r : res) risk.add(r.cd_risk), active.add(r.cd_active), dist.add(r.dist), kkt = std::max(kkt, r.kkt);
    const double risk_pred = dd * (fp.sigma * fp.sigma - sigma * sigma);
    t.add({{"panel", "estimator"}, {"mse_emp", cell(risk.mean())}, {"mse_emp_sd", cell(risk.sd())}, {"mse_se", cell(risk_pred)},
           {"active_emp", cell(active.mean())}, {"active_emp_sd", cell(active.sd())}, {"active_se", cell(fp.active)}});
    o.summary["fixed_point"] = fp.to_json();
    o.summary["reference_max_kkt"] = kkt;
    o.summary["battery"] = battery(t, res[0].x, res[0].beta, s_se[K], prior, K);

    const double rel = std::abs(risk.mean() - risk_pred) / risk_pred;
    o.checks.add("risk_relative_deviation", rel, tol_risk, rel <= tol_risk);
    const double da = std::abs(active.mean() - fp.active);
    o.checks.add("active_fraction_deviation", da, tol_active, da <= tol_active);
    const double cres = std::max({fp.res_sigma, fp.res_t, fp.res_lambda});
    o.checks.add("calibration_residual", cres, tol_res, cres < tol_res);
    double worst = 0;
    for (double d : dist.v) worst = std::max(worst, d);
    o.checks.add("max_amp_to_reference_distance", worst, tol_cd, worst <= tol_cd);
}

// ---------------------------------------------------------------- M-estimation

void exp_mest(const json& cfg, std::uint64_t seed, Output& o) {
    const Loss loss = loss_of(cfg, "loss");
    if (loss.kind == Loss::Kind::LogisticZeta) bad_key("loss", "logistic loss is handled by the logistic experiment");
    const Prior noise = law(cfg, "noise"), prior = law(cfg, "prior");
    const double delta = positive(cfg, "delta");
    const int n = integer(cfg, "n", 10), K = integer(cfg, "K", 1), reps = integer(cfg, "replicates", 1);
    const double tol = positive(cfg, "tolerance_risk_rel"), slack = num(cfg, "bound_slack");
    const int p = int(std::lround(n / delta));
    if (p < 1 || p >= n) bad_key("delta", "must exceed 1 and leave a non-empty design");
    const double dd = double(n) / p;
    const int threads = worker_count(cfg);

    const MestFixedPoint fp = mest_fixed_point(loss, noise, dd);
    const double risk_pred = fp.mse();
    const double info = fisher_information(noise);
    const double bound = std::isfinite(info) ? 1.0 / ((1.0 - 1.0 / dd) * info) : 0.0;

    struct Rep {
        std::vector<double> mse;
        double risk;
        bool converged;
        Vec x, beta;
    };
    const auto res = replicates<Rep>(reps, threads, [&](int r) {
        RngStream rng(seed, r);
        const GlmInstance inst = sample_glm(prior, noise, Link::linear(), n, p, rng);
        const EstimatorResult est =
            loss.kind == Loss::Kind::Square ? ols_reference(inst.X, inst.y) : mest_reference(inst.X, inst.y, loss);
        const MestAmpResult amp = mest_amp(inst, loss, noise, K, rng);
        Rep out;
        for (int k = 1; k <= K; ++k) out.mse.push_back(amp.run.trace.at("mse")[k]);
        out.risk = (est.beta_hat - inst.beta).squaredNorm() / p;
        out.converged = est.converged;
        if (r == 0) out.x = amp.run.betahat[K] - inst.beta, out.beta = inst.beta;
        return out;
    });

    Table& t = o.table;
    for (int k = 1; k <= K; ++k) {
        Acc mse;
        for (const auto& r : res) mse.add(r.mse[k - 1]);
        t.add({{"panel", "iteration"}, {"k", cell(k)}, {"mse_emp", cell(mse.mean())}, {"mse_emp_sd", cell(mse.sd())},
               {"mse_se", cell(risk_pred)}});
    }
    Acc risk;
    bool converged = true;
    for (const auto& r : res) risk.add(r.risk), converged = converged && r.converged;
    t.add({{"panel", "estimator"}, {"mse_emp", cell(risk.mean())}, {"mse_emp_sd", cell(risk.sd())}, {"mse_se", cell(risk_pred)},
           {"lower_bound", cell(bound)}});
    if (loss.kind == Loss::Kind::Square) {
        // Least squares: tau*^2 = Var(noise) / (delta - 1).
        const double closed = noise.m2() / (dd - 1);
        t.add({{"panel", "closed_form"}, {"tau2_solver", cell(fp.tau * fp.tau)}, {"tau2_formula", cell(closed)}});
        const double d = std::abs(fp.tau * fp.tau - closed);
        o.checks.add("closed_form_tau2", d, 1e-9, d <= 1e-9);
    }
    o.summary["fixed_point"] = fp.to_json();
    o.summary["fisher_information"] = std::isfinite(info) ? json(info) : json("inf");
    o.summary["battery"] = battery(t, res[0].x, res[0].beta, std::sqrt(risk_pred), prior, K);

    o.checks.add("reference_converged", converged ? 0.0 : 1.0, 0.0, converged);
    const double rel = std::abs(risk.mean() - risk_pred) / risk_pred;
    o.checks.add("risk_relative_deviation", rel, tol, rel <= tol);
    o.checks.add("risk_lower_bound", risk.mean(), (1 - slack) * bound, risk.mean() >= (1 - slack) * bound);
    const double fres = std::max(fp.res_b, fp.res_tau);
    o.checks.add("fixed_point_residual", fres, 1e-8, fres < 1e-8);
}

// ---------------------------------------------------------------- logistic

void exp_logistic(const json& cfg, std::uint64_t seed, Output& o) {
    const double kappa2 = positive(cfg, "kappa2"), delta = positive(cfg, "delta");
    const int n = integer(cfg, "n", 10), K = integer(cfg, "K", 1), reps = integer(cfg, "replicates", 1);
    const double tol = positive(cfg, "tolerance_rel");
    const int p = int(std::lround(n / delta));
    if (p < 1) bad_key("delta", "gives an empty design");
    const double dd = double(n) / p;
    const int threads = worker_count(cfg);

    LogisticFixedPoint fp;
    try {
        fp = logistic_fixed_point(kappa2, dd);
    } catch (const AmpError& e) {
        if (e.kind() == ErrorKind::Config) throw;
        o.table.add({{"panel", "fixed_point"}, {"status", "not_found"}, {"message", e.what()}});
        throw;
    }
    const Prior prior = Prior::gaussian(0.0, std::sqrt(dd * kappa2));
    const double risk_pred = (fp.mu - 1) * (fp.mu - 1) * prior.m2() + fp.sigma * fp.sigma;

    struct Rep {
        std::vector<double> slope, var, risk;
        double mle_slope = kNA, mle_var = kNA, mle_risk = kNA;
        bool exists = true;
        Vec x, beta;
    };
    const auto res = replicates<Rep>(reps, threads, [&](int r) {
        RngStream rng(seed, r);
        const GlmInstance inst = sample_glm(prior, Prior::point(0.0), Link::logistic(), n, p, rng);
        Rep out;
        const EstimatorResult mle = logistic_mle_reference(inst.X, inst.y);
        out.exists = mle.exists;
        if (mle.exists) {
            out.mle_slope = slope_through_origin(mle.beta_hat, inst.beta);
            out.mle_var = (mle.beta_hat - fp.mu * inst.beta).squaredNorm() / p;
            out.mle_risk = (mle.beta_hat - inst.beta).squaredNorm() / p;
        }
        const LogisticAmpResult amp = logistic_gamp(inst, fp, K, rng);
        for (int k = 1; k <= K; ++k) {
            const Vec& b = amp.run.betahat[k];
            out.slope.push_back(slope_through_origin(b, inst.beta));
            out.var.push_back((b - fp.mu * inst.beta).squaredNorm() / p);
            out.risk.push_back((b - inst.beta).squaredNorm() / p);
        }
        if (r == 0) out.x = amp.run.betahat[K] - fp.mu * inst.beta, out.beta = inst.beta;
        return out;
    });

    Table& t = o.table;
    auto row = [&](const std::string& panel, int k, const Acc& s, const Acc& v, const Acc& rk) {
        std::map<std::string, std::string> c{{"panel", panel}, {"status", "ok"}, {"slope_emp", cell(s.mean())},
                                             {"slope_emp_sd", cell(s.sd())}, {"slope_se", cell(fp.mu)},
                                             {"var_emp", cell(v.mean())}, {"var_emp_sd", cell(v.sd())},
                                             {"var_se", cell(fp.sigma * fp.sigma)}, {"risk_emp", cell(rk.mean())},
                                             {"risk_emp_sd", cell(rk.sd())}, {"risk_se", cell(risk_pred)}};
        if (k >= 0) c["k"] = cell(k);
        t.add(c);
    };
    for (int k = 1; k <= K; ++k) {
        Acc s, v, rk;
        for (const auto& r : res) s.add(r.slope[k - 1]), v.add(r.var[k - 1]), rk.add(r.risk[k - 1]);
        row("iteration", k, s, v, rk);
    }
    Acc s, v, rk;
    int missing = 0;
    for (const auto& r : res) {
        if (!r.exists) {
            ++missing;
            continue;
        }
        s.add(r.mle_slope), v.add(r.mle_var), rk.add(r.mle_risk);
    }
    if (s.v.empty()) {
        t.add({{"panel", "estimator"}, {"status", "mle_not_found"}, {"message", "maximum likelihood estimate does not exist"}});
    } else {
        row("estimator", -1, s, v, rk);
    }
    o.summary["fixed_point"] = fp.to_json();
    o.summary["mle_missing_replicates"] = missing;
    o.summary["battery"] = battery(t, res[0].x, res[0].beta, fp.sigma, prior, K);

    o.checks.add("fixed_point_residual", fp.residual, 1e-8, fp.residual < 1e-8);
    o.checks.add("bias_inflation", fp.mu, 1.0, fp.mu > 1);
    o.checks.add("mle_exists", double(missing), 0.0, missing == 0);
    if (!s.v.empty()) {
        const double ds = std::abs(s.mean() - fp.mu) / fp.mu;
        o.checks.add("slope_relative_deviation", ds, tol, ds <= tol);
        const double dv = std::abs(v.mean() - fp.sigma * fp.sigma) / (fp.sigma * fp.sigma);
        o.checks.add("variance_relative_deviation", dv, tol, dv <= tol);
    }
}

// ---------------------------------------------------------------- state evolution only

void exp_se(const json& cfg, std::uint64_t, Output& o) {
    const Prior prior = unit_law(cfg, "prior");
    const double lambda = positive(cfg, "lambda"), rho0 = num(cfg, "rho0");
    if (rho0 < 0) bad_key("rho0", "must be non-negative");
    const int points = integer(cfg, "grid_points", 2), K = integer(cfg, "K", 1);
    const double rho_max = positive(cfg, "rho_max");
    const GaussQuad quad;

    Table& t = o.table;
    for (int i = 0; i < points; ++i) {
        const double rho = rho_max * i / (points - 1);
        t.add({{"panel", "map"}, {"rho", cell(rho)}, {"map", cell(bayes_map(prior, lambda, rho, quad))}});
    }
    std::vector<double> path{rho0};
    bool monotone = true;
    for (int k = 0; k < K; ++k) {
        const double next = bayes_map(prior, lambda, path.back(), quad);
        t.add({{"panel", "trajectory"}, {"k", cell(k)}, {"rho", cell(path.back())}, {"map", cell(next)}});
        monotone = monotone && next >= path.back() - 1e-12;
        path.push_back(next);
    }
    t.add({{"panel", "trajectory"}, {"k", cell(K)}, {"rho", cell(path.back())}});

    const double intercept = bayes_map(prior, lambda, 0.0, quad);
    const double expected = lambda * lambda * prior.m1() * prior.m1();
    o.checks.add("map_intercept", std::abs(intercept - expected), 1e-10, std::abs(intercept - expected) <= 1e-10);
    o.checks.add("trajectory_monotone", monotone ? 0.0 : 1.0, 0.0, monotone);
    const RhoFixedPoint fp = rho_star(prior, lambda, rho0, quad);
    o.summary["rho_star"] = fp.rho;
    o.summary["rho_star_degenerate"] = fp.degenerate;
    o.summary["rho_star_residual"] = fp.residual;
    o.summary["amse_limit"] = 1 - fp.rho / (lambda * lambda);
    o.summary["map_intercept"] = intercept;
}

// ---------------------------------------------------------------- abstract symmetric AMP

void exp_abstract_sym(const json& cfg, std::uint64_t seed, Output& o) {
    const Prior side = law(cfg, "side");
    const int n = integer(cfg, "n", 10), K = integer(cfg, "K", 1), reps = integer(cfg, "replicates", 1);
    const double tol_w2 = positive(cfg, "tolerance_w2"), ratio = positive(cfg, "onsager_ratio");
    const double tol_ledger = positive(cfg, "tolerance_ledger");
    const int ratio_k = integer(cfg, "ratio_k", 1);
    if (ratio_k > K) bad_key("ratio_k", "must not exceed K");
    const int threads = worker_count(cfg);

    // f_k(x, gamma) = tanh(x + gamma), m^0 ~ N(0,1) independent of gamma, so tau_1 = 1 and F0 = 0.
    const SideDenoiser f{[](double x, double g) { return std::tanh(x + g); },
                         [](double x, double g) {
                             const double th = std::tanh(x + g);
                             return 1 - th * th;
                         },
                         "tanh"};
    const SEPath se = se_symmetric(std::vector<SideDenoiser>(K + 1, f), side, 1.0, K);

    struct Rep {
        std::vector<double> w2, w2_zero, norm2, b;
        Mat gram;
    };
    const auto res = replicates<Rep>(reps, threads, [&](int r) {
        RngStream rng(seed, r);
        RngStream rw = rng.split(1), rg = rng.split(2), rm = rng.split(3);
        const Mat W = sample_goe(n, rw);
        const Vec gamma = side.sample_vec(n, rg);
        const Vec m0 = rm.normal_vec(n);
        const AmpRun run = run_symmetric(W, gamma, m0, constant_seq(f), K + 1);
        RunOptions zero;
        zero.mode = OnsagerMode::zero();
        const AmpRun mut = run_symmetric(W, gamma, m0, constant_seq(f), K, zero);
        Rep out;
        out.gram = Mat::Zero(K, K);
        for (int k = 1; k <= K; ++k) {
            out.w2.push_back(w2_normal(run.h[k], 0.0, se.tau[k]));
            out.w2_zero.push_back(w2_normal(mut.h[k], 0.0, se.tau[k]));
            out.norm2.push_back(dot_n(run.h[k], run.h[k]));
            out.b.push_back(run.b[k]);
            for (int l = 1; l <= K; ++l) out.gram(k - 1, l - 1) = dot_n(run.h[k], run.h[l]);
        }
        return out;
    });

    double worst_w2 = 0, worst_t = 0, worst_b = 0, w2_at = 0, w2_zero_at = 0;
    for (int k = 1; k <= K; ++k) {
        Acc w2, w2z, nrm, b;
        for (const auto& r : res) w2.add(r.w2[k - 1]), w2z.add(r.w2_zero[k - 1]), nrm.add(r.norm2[k - 1]), b.add(r.b[k - 1]);
        o.table.add({{"panel", "iteration"}, {"k", cell(k)}, {"norm2_emp", cell(nrm.mean())}, {"norm2_emp_sd", cell(nrm.sd())},
                     {"norm2_se", cell(se.tau[k] * se.tau[k])}, {"w2_emp", cell(w2.mean())}, {"w2_emp_sd", cell(w2.sd())},
                     {"w2_zero_onsager_emp", cell(w2z.mean())}, {"b_emp", cell(b.mean())}, {"b_emp_sd", cell(b.sd())},
                     {"b_se", cell(se.onsager_b[k])}});
        worst_w2 = std::max(worst_w2, w2.mean());
        worst_b = std::max(worst_b, std::abs(b.mean() - se.onsager_b[k]));
        if (k == ratio_k) w2_at = w2.mean(), w2_zero_at = w2z.mean();
        for (int l = 1; l <= K; ++l) {
            Acc g;
            for (const auto& r : res) g.add(r.gram(k - 1, l - 1));
            worst_t = std::max(worst_t, std::abs(g.mean() - se.ledger(k - 1, l - 1)));
        }
    }
    o.summary["state_evolution"] = se.to_json();
    o.checks.add("max_w2", worst_w2, tol_w2, worst_w2 <= tol_w2);
    o.checks.add("zero_onsager_w2_ratio", w2_zero_at / w2_at, ratio, w2_zero_at >= ratio * w2_at);
    o.checks.add("max_ledger_deviation", worst_t, tol_ledger, worst_t <= tol_ledger);
    o.checks.add("max_onsager_deviation", worst_b, tol_ledger, worst_b <= tol_ledger);
}

// ---------------------------------------------------------------- registry

struct Experiment {
    std::vector<std::string> columns;
    std::function<void(const json&, std::uint64_t, Output&)> run;
};

const std::map<std::string, Experiment>& registry() {
    static const std::map<std::string, Experiment> r = {
        {"spiked",
         {{"panel", "k", "lambda", "amse_emp", "amse_emp_sd", "amse_se", "corr_emp", "corr_emp_sd", "corr_se",
           "amse_inf_se", "pilot_opt_emp", "pilot_opt_se", "pilot_caption_emp", "pilot_caption_formula"},
          exp_spiked}},
        {"bbp",
         {{"panel", "lambda", "lambda1_emp", "lambda1_emp_sd", "lambda1_se", "corr_emp", "corr_emp_sd", "corr_se",
           "checked"},
          exp_bbp}},
        {"lasso",
         {{"panel", "k", "mse_emp", "mse_emp_sd", "mse_se", "active_emp", "active_emp_sd", "active_se", "sigma_emp",
           "sigma_emp_sd", "sigma_se", "test", "pl_emp", "pl_se"},
          exp_lasso}},
        {"mest",
         {{"panel", "k", "mse_emp", "mse_emp_sd", "mse_se", "lower_bound", "tau2_solver", "tau2_formula", "test",
           "pl_emp", "pl_se"},
          exp_mest}},
        {"logistic",
         {{"panel", "k", "status", "slope_emp", "slope_emp_sd", "slope_se", "var_emp", "var_emp_sd", "var_se",
           "risk_emp", "risk_emp_sd", "risk_se", "test", "pl_emp", "pl_se", "message"},
          exp_logistic}},
        {"se", {{"panel", "k", "rho", "map"}, exp_se}},
        {"abstract-sym",
         {{"panel", "k", "norm2_emp", "norm2_emp_sd", "norm2_se", "w2_emp", "w2_emp_sd", "w2_zero_onsager_emp", "b_emp",
           "b_emp_sd", "b_se"},
          exp_abstract_sym}},
    };
    return r;
}

std::string canonical(const std::string& name) {
    if (name == "se-only") return "se";
    if (!registry().count(name)) fail(ErrorKind::Config, "unknown experiment '" + name + "'");
    return name;
}

json rademacher_json() { return {{"kind", "rademacher"}}; }

json resolve_config(const std::string& name, const json& user) {
    if (!user.is_object()) fail(ErrorKind::Config, "config: top level must be a JSON object");
    json cfg = default_config(name);
    for (const auto& [k, v] : user.items()) {
        if (k == "experiment") {
            if (!v.is_string() || canonical(v.get<std::string>()) != name)
                bad_key(k, "does not match the requested experiment '" + name + "'");
            continue;
        }
        if (!cfg.contains(k)) bad_key(k, "is not a recognised option for experiment '" + name + "'");
        cfg[k] = v;
    }
    if (integer(cfg, "schema_version", 0) != kSchemaVersion) bad_key("schema_version", "must be 1");
    if (!field(cfg, "quick_overrides").is_object()) bad_key("quick_overrides", "must be an object");
    if (flag(cfg, "quick")) {
        for (const auto& [k, v] : cfg["quick_overrides"].items()) {
            if (!cfg.contains(k) || k == "quick" || k == "quick_overrides") bad_key("quick_overrides." + k, "is not an option");
            cfg[k] = v;
        }
    }
    const json& s = field(cfg, "seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        bad_key("seed", "must be a non-negative integer");
    return cfg;
}

}  // namespace

std::string ExperimentReport::csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_field(columns[i]);
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i]);
        out += "\n";
    }
    return out;
}

std::vector<std::string> experiment_names() {
    std::vector<std::string> out;
    for (const auto& [k, _] : registry()) out.push_back(k);
    return out;
}

json default_config(const std::string& name_in) {
    const std::string name = canonical(name_in);
    json c = {{"experiment", name}, {"schema_version", kSchemaVersion}, {"seed", 20240601}, {"threads", 0}, {"quick", false}};
    if (name == "spiked") {
        std::vector<double> grid;
        for (int i = 1; i <= 15; ++i) grid.push_back(0.2 * i);
        c.update({{"prior", rademacher_json()}, {"lambda", 1.7}, {"n", 4000}, {"K", 10}, {"replicates", 10},
                  {"init", "spectral"}, {"init_c", 1.0}, {"oracle_mu0", 1.0}, {"oracle_sigma0", 1.0},
                  {"policy", "bayes"}, {"st_factor", 2.0}, {"params", "state_evolution"}, {"tolerance", 0.03},
                  {"monotone_slack", 0.02}, {"lambda_grid", grid}, {"grid_n", 1000}, {"grid_replicates", 2},
                  {"quick_overrides",
                   {{"n", 400}, {"K", 5}, {"replicates", 2}, {"tolerance", 0.15}, {"monotone_slack", 0.1},
                    {"lambda_grid", {0.5, 1.5, 2.5}}, {"grid_n", 300}, {"grid_replicates", 1}}}});
    } else if (name == "bbp") {
        c.update({{"prior", rademacher_json()}, {"lambda_grid", {0.5, 1.0, 1.7, 2.5}}, {"n", 4000}, {"replicates", 5},
                  {"tolerance_eigenvalue", 0.05}, {"tolerance_corr", 0.03}, {"null_corr_max", 0.1},
                  {"check_margin", 0.4},
                  {"quick_overrides",
                   {{"n", 400}, {"replicates", 2}, {"tolerance_eigenvalue", 0.25}, {"tolerance_corr", 0.15},
                    {"null_corr_max", 0.3}}}});
    } else if (name == "lasso") {
        const double a = std::sqrt(10.0);
        c.update({{"prior", {{"kind", "discrete"}, {"atoms", {{0.0, 0.9}, {a, 0.05}, {-a, 0.05}}}}}, {"delta", 0.5},
                  {"n", 1000}, {"sigma", 0.2}, {"lambda", 1.0}, {"K", 50}, {"replicates", 10}, {"stationary", true},
                  {"tolerance_risk_rel", 0.15}, {"tolerance_active", 0.02}, {"tolerance_amp_cd", 1e-3},
                  {"tolerance_residual", 1e-9},
                  {"quick_overrides",
                   {{"n", 200}, {"K", 20}, {"replicates", 2}, {"tolerance_risk_rel", 0.6}, {"tolerance_active", 0.08},
                    {"tolerance_amp_cd", 1e-2}}}});
    } else if (name == "mest") {
        c.update({{"loss", {{"kind", "pseudo_huber"}, {"param", 1.0}}}, {"noise", {{"kind", "gaussian"}, {"sd", 1.0}}},
                  {"prior", {{"kind", "gaussian"}, {"sd", 1.0}}}, {"delta", 2.0}, {"n", 2000}, {"K", 30},
                  {"replicates", 5}, {"tolerance_risk_rel", 0.1}, {"bound_slack", 0.1},
                  {"quick_overrides", {{"n", 300}, {"K", 10}, {"replicates", 2}, {"tolerance_risk_rel", 0.4}, {"bound_slack", 0.3}}}});
    } else if (name == "logistic") {
        c.update({{"kappa2", 0.2}, {"delta", 5.0}, {"n", 2500}, {"K", 20}, {"replicates", 10}, {"tolerance_rel", 0.1},
                  {"quick_overrides", {{"n", 500}, {"K", 5}, {"replicates", 2}, {"tolerance_rel", 0.4}}}});
    } else if (name == "se") {
        c.update({{"prior", {{"kind", "discrete"}, {"atoms", {{0.0, 0.75}, {2.0, 0.25}}}}}, {"lambda", 1.7},
                  {"rho0", 0.0}, {"grid_points", 121}, {"rho_max", 4.0}, {"K", 30},
                  {"quick_overrides", {{"grid_points", 11}, {"K", 10}}}});
    } else {
        c.update({{"side", rademacher_json()}, {"n", 4000}, {"K", 5}, {"replicates", 10}, {"tolerance_w2", 0.05},
                  {"onsager_ratio", 3.0}, {"ratio_k", 3}, {"tolerance_ledger", 0.05},
                  {"quick_overrides",
                   {{"n", 400}, {"K", 3}, {"replicates", 2}, {"tolerance_w2", 0.15}, {"tolerance_ledger", 0.15},
                    {"onsager_ratio", 1.5}}}});
    }
    return c;
}

ExperimentReport run_experiment(const std::string& name_in, json config, std::optional<std::uint64_t> seed) {
    ExperimentReport rep;
    rep.experiment = name_in;
    std::optional<Output> out;
    try {
        const std::string name = canonical(name_in);
        rep.experiment = name;
        json cfg = resolve_config(name, config);
        if (seed) cfg["seed"] = *seed;
        const std::uint64_t s = cfg["seed"].get<std::uint64_t>();
        const Experiment& e = registry().at(name);
        out.emplace(Output{Table(e.columns), json::object(), Checks{}});
        out->summary["experiment"] = name;
        out->summary["config"] = cfg;
        e.run(cfg, s, *out);
        out->summary["checks"] = out->checks.j;
        out->summary["pass"] = out->checks.ok;
        rep.exit_code = out->checks.ok ? 0 : 2;
        rep.summary = std::move(out->summary);
        rep.columns = std::move(out->table.columns);
        rep.rows = std::move(out->table.rows);
    } catch (const std::exception& ex) {
        const auto* ae = dynamic_cast<const AmpError*>(&ex);
        const bool config_error =
            (ae && ae->kind() == ErrorKind::Config) || dynamic_cast<const json::exception*>(&ex) != nullptr;
        rep.exit_code = config_error ? 4 : 3;
        static const char* kinds[] = {"precondition", "solver", "config", "non_finite", "degenerate"};
        const std::string kind = ae ? kinds[int(ae->kind())] : (config_error ? "config" : "internal");
        json summary = out ? out->summary : json::object();
        summary["experiment"] = rep.experiment;
        summary["pass"] = false;
        summary["error"] = {{"kind", kind}, {"message", ex.what()}};
        rep.summary = std::move(summary);
        if (out && !out->table.rows.empty()) {
            // Keep structured rows produced before the failure.
            rep.columns = out->table.columns;
            rep.rows = out->table.rows;
        } else {
            rep.columns = {"panel", "status", "message"};
            rep.rows = {{"error", kind, ex.what()}};
        }
    }
    rep.summary["exit_code"] = rep.exit_code;
    return rep;
}

void write_report(const ExperimentReport& rep, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorKind::Config, "cannot create output directory " + out_dir.string() + ": " + ec.message());
    std::ofstream js(out_dir / "report.json", std::ios::binary);
    std::ofstream cs(out_dir / "metrics.csv", std::ios::binary);
    if (!js || !cs) fail(ErrorKind::Config, "cannot write report files in " + out_dir.string());
    js << rep.summary.dump(2) << "\n";
    cs << rep.csv();
}

}  // namespace amp
