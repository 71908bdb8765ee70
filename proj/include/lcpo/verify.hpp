#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lcpo {

/// One verification check: pass iff measured <= threshold.
struct Check {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct SuiteReport {
    std::string suite;
    std::vector<Check> checks;
    bool pass = false;
};

Check make_check(std::string name, double measured, double threshold);
void finalize(SuiteReport& report);

/// Fixed-point property of the averaging operator on generated batches:
/// |T(eta*) - eta*| within the binomial sampling bound, across N scales.
SuiteReport suite_fixed_point(std::uint64_t seed);

/// Reliability recovery by full-batch EM on calibrated batches: accuracy
/// of the fixed point, agreement across initializations, and monotone
/// ascent of the log-likelihood along every trajectory.
SuiteReport suite_convergence(std::uint64_t seed);

/// Analytic-identity and cross-implementation checks: derivative identity
/// residual, log-likelihood agreement with the independent oracle, and
/// EM fixed point vs grid MLE.
SuiteReport suite_identity(std::uint64_t seed);

/// Uninformative regime (all p* = 0.5): the operator is the identity, the
/// likelihood is flat, and both estimators flag the batch as degenerate.
SuiteReport suite_degenerate(std::uint64_t seed);

/// End-to-end single-annotator training sweep: EMA reliability tracking of
/// the true reliability across eta* in {0.95, 0.9, 0.8, 0.7, 0.6}.
SuiteReport suite_recovery_single(std::uint64_t seed);

/// Two annotators, one clean and one progressively noised: the clean
/// estimate stays put while the noised one tracks effective reliability.
SuiteReport suite_recovery_two(std::uint64_t seed);

/// Dispatch by suite name (FIXED_POINT, CONVERGENCE, IDENTITY, DEGENERATE,
/// RECOVERY_SINGLE, RECOVERY_TWO). Throws std::invalid_argument on an
/// unknown name.
SuiteReport run_suite(const std::string& name, std::uint64_t seed);

/// Writes {suite, config_hash, checks: [{name, measured, threshold, pass}],
/// pass} as JSON.
void write_report_json(const std::string& path, const SuiteReport& report,
                       const std::string& config_hash);

}  // namespace lcpo
