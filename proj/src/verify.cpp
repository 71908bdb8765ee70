#include "lcpo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lcpo/em.hpp"
#include "lcpo/em_theory.hpp"
#include "lcpo/math_util.hpp"
#include "lcpo/oracle.hpp"
#include "lcpo/synth_data.hpp"

namespace lcpo {

Check make_check(std::string name, double measured, double threshold) {
    Check c;
    c.name = std::move(name);
    c.measured = measured;
    c.threshold = threshold;
    c.pass = measured <= threshold;
    return c;
}

void finalize(SuiteReport& report) {
    report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const Check& c) { return c.pass; });
}

namespace {

std::string fmt(double x) {
    std::ostringstream out;
    out << x;
    return out.str();
}

/// Single-annotator batch with ambiguous pairs present (wide p* spread).
GeneratorSpec ambiguous_spec(std::int64_t n, double eta, std::uint64_t seed) {
    GeneratorSpec spec;
    spec.n_pairs = n;
    spec.k_annotators = 1;
    spec.eta_true = {eta};
    spec.p_star_law = PStarLaw::BetaDistribution;
    spec.seed = seed;
    return spec;
}

/// Single-annotator batch with decisive pairs (margin std 2.5, so p* mass
/// sits near 0 and 1). Reliability information per label is close to the
/// binomial limit, which the tight recovery tolerances assume.
GeneratorSpec decisive_spec(std::int64_t n, double eta, std::uint64_t seed) {
    GeneratorSpec spec;
    spec.n_pairs = n;
    spec.k_annotators = 1;
    spec.eta_true = {eta};
    spec.feature_dim = 8;
    spec.p_star_law = PStarLaw::FromThetaStar;
    spec.theta_star.assign(8, 0.625);
    spec.gen_beta = 1.0;
    spec.seed = seed;
    return spec;
}

double u01(SplitMix64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int count_ascent_violations(const CalibratedBatch& batch,
                            const std::vector<double>& trajectory) {
    int violations = 0;
    for (std::size_t t = 0; t + 1 < trajectory.size(); ++t) {
        if (loglik_increment(batch, trajectory[t], trajectory[t + 1]) < 0.0) {
            ++violations;
        }
    }
    return violations;
}

}  // namespace

SuiteReport suite_fixed_point(std::uint64_t seed) {
    SuiteReport report;
    report.suite = "FIXED_POINT";
    const double eta_star = 0.75;
    for (std::int64_t n : {1000, 10000, 100000}) {
        const auto ds = generate(
            ambiguous_spec(n, eta_star, mix_seed(seed, static_cast<std::uint64_t>(n))));
        const CalibratedBatch batch(true_p_star(ds));
        const double residual = fixed_point_residual_at_truth(batch, eta_star);
        const double bound = 3.0 * std::sqrt(eta_star * (1.0 - eta_star) /
                                             static_cast<double>(n));
        report.checks.push_back(make_check(
            "residual_eta0.75_n" + std::to_string(n), residual, bound));
    }
    {
        const std::int64_t n = 10000;
        const auto ds = generate(ambiguous_spec(n, 0.5, mix_seed(seed, 5)));
        const CalibratedBatch batch(true_p_star(ds));
        const double residual = fixed_point_residual_at_truth(batch, 0.5);
        report.checks.push_back(make_check(
            "residual_coinflip_n" + std::to_string(n), residual,
            3.0 * std::sqrt(0.25 / static_cast<double>(n))));
    }
    finalize(report);
    return report;
}

SuiteReport suite_convergence(std::uint64_t seed) {
    SuiteReport report;
    report.suite = "CONVERGENCE";
    const std::int64_t n = 10000;
    const double inits[] = {0.05, 0.5, 0.95};
    int idx = 0;
    for (double eta_star : {0.6, 0.7, 0.8, 0.9, 0.95}) {
        const auto ds = generate(
            decisive_spec(n, eta_star, mix_seed(seed, 100 + static_cast<std::uint64_t>(idx++))));
        const CalibratedBatch batch(true_p_star(ds));

        double lo = 1.0, hi = 0.0;
        int violations = 0;
        for (double eta0 : inits) {
            const auto res = iterate_to_fixed_point(batch, eta0);
            lo = std::min(lo, res.eta_hat);
            hi = std::max(hi, res.eta_hat);
            violations += count_ascent_violations(batch, res.trajectory);
        }
        const std::string tag = "eta" + fmt(eta_star);
        report.checks.push_back(
            make_check("recovery_" + tag, std::fabs(hi - eta_star), 0.02));
        report.checks.push_back(make_check("init_spread_" + tag, hi - lo, 1e-8));
        report.checks.push_back(make_check("ascent_violations_" + tag,
                                           static_cast<double>(violations), 0.0));
    }
    finalize(report);
    return report;
}

SuiteReport suite_identity(std::uint64_t seed) {
    SuiteReport report;
    report.suite = "IDENTITY";

    SplitMix64 rng(mix_seed(seed, 7));
    double max_identity = 0.0;
    double max_loglik_diff = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(u01(rng) * 200.0);
        std::vector<double> p(static_cast<std::size_t>(n));
        for (double& v : p) v = 0.02 + 0.96 * u01(rng);
        const double eta = 0.05 + 0.9 * u01(rng);
        const CalibratedBatch batch(p);
        max_identity = std::max(max_identity,
                                derivative_identity_residual(batch, eta));
        max_loglik_diff = std::max(
            max_loglik_diff,
            std::fabs(loglik_eta(batch, eta) - marginal_loglik(p, eta)));
    }
    report.checks.push_back(
        make_check("derivative_identity_max_residual", max_identity, 1e-9));
    report.checks.push_back(
        make_check("loglik_cross_impl_max_diff", max_loglik_diff, 1e-10));

    double max_mle_diff = 0.0;
    const GridSpec grid;
    for (int trial = 0; trial < 100; ++trial) {
        const double eta_star = 0.55 + 0.4 * u01(rng);
        const std::int64_t n = 50 + static_cast<std::int64_t>(u01(rng) * 350.0);
        // Redraw until the score brackets an optimum inside the search
        // domain. A rare small-sample batch puts the maximizer on the
        // boundary, where the two estimators clamp to different caps and
        // the agreement claim does not apply.
        std::vector<double> p;
        for (std::uint64_t attempt = 0;; ++attempt) {
            const auto ds = generate(ambiguous_spec(
                n, eta_star,
                mix_seed(seed, 1000 + static_cast<std::uint64_t>(trial) +
                                   7919 * attempt)));
            p = true_p_star(ds);
            const CalibratedBatch probe(p);
            if (loglik_deriv(probe, grid.lo) > 0.0 &&
                loglik_deriv(probe, grid.hi) < 0.0) {
                break;
            }
            if (attempt >= 64) {
                throw std::runtime_error("could not draw an interior batch");
            }
        }
        const CalibratedBatch batch(p);
        const auto em = iterate_to_fixed_point(batch, 0.7);
        const auto mle = grid_mle_eta(p, grid);
        if (mle.degenerate || em.degenerate) {
            throw std::runtime_error("unexpected degenerate batch in IDENTITY suite");
        }
        max_mle_diff = std::max(max_mle_diff, std::fabs(em.eta_hat - mle.eta_hat));
    }
    report.checks.push_back(
        make_check("fixed_point_vs_grid_mle_max_diff", max_mle_diff, 1e-6));

    {
        const std::vector<double> flat(64, 0.5);
        const auto em = iterate_to_fixed_point(CalibratedBatch(flat), 0.7);
        const auto mle = grid_mle_eta(flat, grid);
        const int mismatches = (em.degenerate ? 0 : 1) + (mle.degenerate ? 0 : 1);
        report.checks.push_back(make_check("degenerate_flag_agreement",
                                           static_cast<double>(mismatches), 0.0));
    }
    finalize(report);
    return report;
}

SuiteReport suite_degenerate(std::uint64_t seed) {
    (void)seed;  // nothing stochastic in this suite
    SuiteReport report;
    report.suite = "DEGENERATE";
    const std::vector<double> flat(128, 0.5);
    const CalibratedBatch batch(flat);

    double max_t_diff = 0.0;
    double loglik_lo = 0.0, loglik_hi = 0.0;
    const int n_grid = 10000;
    for (int i = 0; i < n_grid; ++i) {
        const double eta = 1e-4 + (1.0 - 2e-4) * static_cast<double>(i) /
                                      static_cast<double>(n_grid - 1);
        max_t_diff = std::max(max_t_diff, std::fabs(operator_T(batch, eta) - eta));
        const double ll = loglik_eta(batch, eta);
        if (i == 0) {
            loglik_lo = loglik_hi = ll;
        } else {
            loglik_lo = std::min(loglik_lo, ll);
            loglik_hi = std::max(loglik_hi, ll);
        }
    }
    report.checks.push_back(
        make_check("operator_is_identity_max_diff", max_t_diff, 1e-15));
    report.checks.push_back(
        make_check("loglik_flat_range", loglik_hi - loglik_lo, 1e-9));

    const auto em = iterate_to_fixed_point(batch, 0.7);
    report.checks.push_back(make_check("iterate_flags_degenerate",
                                       em.degenerate ? 0.0 : 1.0, 0.0));
    report.checks.push_back(make_check(
        "iterate_returns_init", std::fabs(em.eta_hat - 0.7), 1e-15));
    const auto mle = grid_mle_eta(flat, GridSpec{});
    report.checks.push_back(make_check("grid_mle_flags_degenerate",
                                       mle.degenerate ? 0.0 : 1.0, 0.0));
    finalize(report);
    return report;
}

namespace {

/// Training run used by the recovery suites. The soft update keeps its
/// reference settings (alpha 0.1 from a 0.9 start); the schedule is long
/// enough that the policy is sharp, since an under-trained policy's
/// probabilities hug 1/2 and bias the reliability estimate upward, and the
/// batch is sized so the estimate's own noise floor (stationary EMA
/// standard deviation about 0.010) sits well inside the suite tolerances.
TrainResult recovery_run(const Dataset& ds, std::uint64_t seed) {
    LossSpec loss;
    loss.kind = LossKind::DPO;
    loss.beta = 1.0;
    EmConfig em;
    em.eta_init = 0.9;
    em.alpha = 0.1;
    em.update_mode = EtaUpdateMode::EmaPerBatch;
    OptimizerConfig opt;
    opt.learning_rate = 0.2;
    opt.epochs = 250;
    opt.batch_size = 128;
    opt.seed = seed;
    const std::size_t dim = ds.front().features.phi_w.size();
    return run_lcpo(ds, PolicyParams::zeros(dim), loss, em, opt);
}

}  // namespace

SuiteReport suite_recovery_single(std::uint64_t seed) {
    SuiteReport report;
    report.suite = "RECOVERY_SINGLE";
    int idx = 0;
    for (double eta_star : {0.95, 0.9, 0.8, 0.7, 0.6}) {
        const auto ds = generate(decisive_spec(
            10000, eta_star, mix_seed(seed, 200 + static_cast<std::uint64_t>(idx))));
        const auto res = recovery_run(ds, mix_seed(seed, 300 + static_cast<std::uint64_t>(idx)));
        report.checks.push_back(make_check(
            "track_eta" + fmt(eta_star),
            std::fabs(res.table.eta.at(0) - eta_star), 0.05));
        ++idx;
    }
    finalize(report);
    return report;
}

SuiteReport suite_recovery_two(std::uint64_t seed) {
    SuiteReport report;
    report.suite = "RECOVERY_TWO";

    GeneratorSpec spec = decisive_spec(6000, 0.9, mix_seed(seed, 400));
    spec.k_annotators = 2;
    spec.eta_true = {0.9, 0.9};
    const Dataset base = generate(spec);

    int idx = 0;
    for (double f : {0.0, 0.1, 0.2, 0.3}) {
        auto groups = split_by_annotator(base);
        const Dataset noised =
            inject_noise(groups.at(1), f, mix_seed(seed, 500 + static_cast<std::uint64_t>(idx)));
        Dataset merged = groups.at(0);
        merged.insert(merged.end(), noised.begin(), noised.end());
        std::sort(merged.begin(), merged.end(),
                  [](const PreferencePair& a, const PreferencePair& b) {
                      return a.id < b.id;
                  });

        const auto res =
            recovery_run(merged, mix_seed(seed, 600 + static_cast<std::uint64_t>(idx)));
        const double eta_eff = effective_reliability(0.9, f);
        const std::string tag = "_f" + fmt(f);
        report.checks.push_back(make_check(
            "clean_annotator_stable" + tag,
            std::fabs(res.table.eta.at(0) - 0.9), 0.03));
        report.checks.push_back(make_check(
            "noised_annotator_tracks" + tag,
            std::fabs(res.table.eta.at(1) - eta_eff), 0.05));
        ++idx;
    }
    finalize(report);
    return report;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "FIXED_POINT") return suite_fixed_point(seed);
    if (name == "CONVERGENCE") return suite_convergence(seed);
    if (name == "IDENTITY") return suite_identity(seed);
    if (name == "DEGENERATE") return suite_degenerate(seed);
    if (name == "RECOVERY_SINGLE") return suite_recovery_single(seed);
    if (name == "RECOVERY_TWO") return suite_recovery_two(seed);
    throw std::invalid_argument(
        "unknown suite: " + name +
        " (expected FIXED_POINT, CONVERGENCE, IDENTITY, DEGENERATE, "
        "RECOVERY_SINGLE or RECOVERY_TWO)");
}

void write_report_json(const std::string& path, const SuiteReport& report,
                       const std::string& config_hash) {
    nlohmann::ordered_json doc;
    doc["suite"] = report.suite;
    doc["config_hash"] = config_hash;
    doc["checks"] = nlohmann::ordered_json::array();
    for (const Check& c : report.checks) {
        nlohmann::ordered_json item;
        item["name"] = c.name;
        item["measured"] = c.measured;
        item["threshold"] = c.threshold;
        item["pass"] = c.pass;
        doc["checks"].push_back(std::move(item));
    }
    doc["pass"] = report.pass;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open report file: " + path);
    out << doc.dump(2) << "\n";
}

}  // namespace lcpo
