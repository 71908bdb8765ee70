#include "lcpo/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace lcpo {

void GridSpec::validate() const {
    if (!(lo > 0.0 && hi < 1.0 && lo < hi)) {
        throw std::invalid_argument("GridSpec: need 0 < lo < hi < 1");
    }
    if (n_points < 3) {
        throw std::invalid_argument("GridSpec: need at least 3 points");
    }
}

double marginal_loglik(const std::vector<double>& p_star, double eta) {
    double sum = 0.0;
    for (double p : p_star) {
        sum += std::log(p * eta + (1.0 - p) * (1.0 - eta));
    }
    return sum;
}

namespace {

/// Successive grid differences must rise then fall (one sign change at
/// most). Differences below the noise floor of the sums count as flat.
void check_unimodal(const std::vector<double>& values) {
    const double tol = 1e-12 * (1.0 + std::fabs(values.front()));
    bool falling = false;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double diff = values[i] - values[i - 1];
        if (diff > tol && falling) {
            throw std::runtime_error("grid log-likelihood is not unimodal");
        }
        if (diff < -tol) falling = true;
    }
}

double golden_section_max(const std::vector<double>& p_star, double lo,
                          double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = marginal_loglik(p_star, c);
    double fd = marginal_loglik(p_star, d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = marginal_loglik(p_star, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = marginal_loglik(p_star, d);
        }
    }
    return (a + b) / 2.0;
}

}  // namespace

GridMleResult grid_mle_eta(const std::vector<double>& p_star,
                           const GridSpec& grid) {
    grid.validate();
    if (p_star.empty()) {
        throw std::invalid_argument("grid_mle_eta: empty batch");
    }

    GridMleResult res;
    res.degenerate = true;
    for (double p : p_star) {
        if (p != 0.5) {
            res.degenerate = false;
            break;
        }
    }
    if (res.degenerate) return res;

    const int n = grid.n_points;
    const double step = (grid.hi - grid.lo) / static_cast<double>(n - 1);
    std::vector<double> values(static_cast<std::size_t>(n));
    int best = 0;
    for (int i = 0; i < n; ++i) {
        const double eta = grid.lo + step * static_cast<double>(i);
        values[static_cast<std::size_t>(i)] = marginal_loglik(p_star, eta);
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    check_unimodal(values);

    const double bracket_lo = grid.lo + step * static_cast<double>(best > 0 ? best - 1 : 0);
    const double bracket_hi = grid.lo + step * static_cast<double>(best < n - 1 ? best + 1 : n - 1);
    res.eta_hat = golden_section_max(p_star, bracket_lo, bracket_hi, 1e-8);
    return res;
}

}  // namespace lcpo
