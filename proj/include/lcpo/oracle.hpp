#pragma once

#include <vector>

namespace lcpo {

/// Search grid for the brute-force reliability estimator. Strictly inside
/// (0,1) so every grid point has a finite log-likelihood.
struct GridSpec {
    double lo = 1e-4;
    double hi = 1.0 - 1e-4;
    int n_points = 10000;

    void validate() const;
};

/// Observed-data log-likelihood of a label set, written independently of
/// the training code (plain summation, no shared helpers) so agreement
/// between the two implementations is a meaningful check.
double marginal_loglik(const std::vector<double>& p_star, double eta);

struct GridMleResult {
    double eta_hat = 0.0;
    // Every p_star equals 0.5: the likelihood is flat and the reliability
    // is unidentifiable, so no estimate is produced.
    bool degenerate = false;
};

/// Maximum-likelihood reliability by exhaustive grid search, refined by a
/// golden-section pass inside the winning cell to width 1e-8. Verifies the
/// grid profile is unimodal before refining (the likelihood is strictly
/// concave whenever some p_star differs from 0.5).
GridMleResult grid_mle_eta(const std::vector<double>& p_star,
                           const GridSpec& grid);

}  // namespace lcpo
