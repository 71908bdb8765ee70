#pragma once

#include <string>
#include <vector>

namespace lcpo {

/// Ground-truth preference probabilities of one annotator's labeled pairs
/// under a perfectly calibrated model. Entries are clamped into
/// [1e-6, 1-1e-6] on construction.
struct CalibratedBatch {
    std::vector<double> p_star;

    explicit CalibratedBatch(std::vector<double> probs);

    std::size_t size() const { return p_star.size(); }
    /// True when every entry equals 0.5, i.e. the model is uninformative
    /// about reliability and the likelihood is flat in eta.
    bool degenerate() const;
};

/// Full-batch EM averaging operator on the reliability:
/// T(eta) = mean_i of p_i*eta / (p_i*eta + (1-p_i)*(1-eta)).
/// Maps (0,1) into (0,1); the true reliability is its fixed point.
double operator_T(const CalibratedBatch& batch, double eta);

struct FixedPointResult {
    double eta_hat = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
    std::vector<double> trajectory;  // eta_0 .. eta_n
};

/// Iterates eta <- T(eta) until the step falls below tol or max_iters is
/// reached. A degenerate batch returns eta0 immediately, flagged.
FixedPointResult iterate_to_fixed_point(const CalibratedBatch& batch,
                                        double eta0, double tol = 1e-10,
                                        int max_iters = 100000);

/// Observed-data log-likelihood of the annotator's labels:
/// sum_i log(p_i*eta + (1-p_i)*(1-eta)).
double loglik_eta(const CalibratedBatch& batch, double eta);

/// Analytic first derivative of loglik_eta.
double loglik_deriv(const CalibratedBatch& batch, double eta);

/// Analytic second derivative; strictly negative whenever some p_i != 0.5.
double loglik_second_deriv(const CalibratedBatch& batch, double eta);

/// loglik_eta(batch, eta_to) - loglik_eta(batch, eta_from), evaluated as a
/// sum of log1p terms so the sign is meaningful even when the difference is
/// far below the rounding error of the two full sums.
double loglik_increment(const CalibratedBatch& batch, double eta_from,
                        double eta_to);

/// |l'(eta) - N/(eta(1-eta)) * (T(eta) - eta)|. The two sides agree
/// analytically; the residual measures floating-point noise only.
double derivative_identity_residual(const CalibratedBatch& batch, double eta);

/// |T(eta_star) - eta_star| on an empirical batch whose labels were
/// generated with reliability eta_star. Shrinks as O(N^-1/2).
double fixed_point_residual_at_truth(const CalibratedBatch& batch,
                                     double eta_star);

/// Writes a fixed-point trajectory as CSV with columns
/// t,eta_t,loglik_t,residual_t. header_comment, when nonempty, is emitted
/// first as a '#' line.
void write_trajectory_csv(const std::string& path, const CalibratedBatch& batch,
                          const FixedPointResult& result,
                          const std::string& header_comment = "");

}  // namespace lcpo
