#include "lcpo/em_theory.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "lcpo/math_util.hpp"

namespace lcpo {

CalibratedBatch::CalibratedBatch(std::vector<double> probs)
    : p_star(std::move(probs)) {
    if (p_star.empty()) {
        throw std::invalid_argument("CalibratedBatch: empty batch");
    }
    for (double& p : p_star) {
        if (!std::isfinite(p)) {
            throw std::invalid_argument("CalibratedBatch: non-finite p_star");
        }
        p = clamp_prob(p);
    }
}

bool CalibratedBatch::degenerate() const {
    for (double p : p_star) {
        if (p != 0.5) return false;
    }
    return true;
}

// Mixture density of one label: d_i(eta) = p_i*eta + (1-p_i)*(1-eta).
// Stays in [eps, 1-eps] for eta in (0,1), so logs and divisions are safe.
static double mix_density(double p, double eta) {
    return p * eta + (1.0 - p) * (1.0 - eta);
}

double operator_T(const CalibratedBatch& batch, double eta) {
    eta = clamp_prob(eta);
    KahanSum acc;
    for (double p : batch.p_star) {
        acc.add(posterior_weight(p, eta));
    }
    return acc.value() / static_cast<double>(batch.size());
}

FixedPointResult iterate_to_fixed_point(const CalibratedBatch& batch,
                                        double eta0, double tol,
                                        int max_iters) {
    FixedPointResult res;
    res.eta_hat = clamp_prob(eta0);
    res.trajectory.push_back(res.eta_hat);
    if (batch.degenerate()) {
        res.degenerate = true;
        res.converged = true;
        return res;
    }
    for (int t = 0; t < max_iters; ++t) {
        const double next = operator_T(batch, res.eta_hat);
        res.trajectory.push_back(next);
        const double step = std::fabs(next - res.eta_hat);
        res.eta_hat = next;
        res.iterations = t + 1;
        if (step < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

double loglik_eta(const CalibratedBatch& batch, double eta) {
    eta = clamp_prob(eta);
    KahanSum acc;
    for (double p : batch.p_star) {
        acc.add(std::log(mix_density(p, eta)));
    }
    return acc.value();
}

double loglik_deriv(const CalibratedBatch& batch, double eta) {
    eta = clamp_prob(eta);
    KahanSum acc;
    for (double p : batch.p_star) {
        acc.add((2.0 * p - 1.0) / mix_density(p, eta));
    }
    return acc.value();
}

double loglik_second_deriv(const CalibratedBatch& batch, double eta) {
    eta = clamp_prob(eta);
    KahanSum acc;
    for (double p : batch.p_star) {
        const double r = (2.0 * p - 1.0) / mix_density(p, eta);
        acc.add(-r * r);
    }
    return acc.value();
}

double loglik_increment(const CalibratedBatch& batch, double eta_from,
                        double eta_to) {
    eta_from = clamp_prob(eta_from);
    eta_to = clamp_prob(eta_to);
    const double delta = eta_to - eta_from;
    // log d_i(eta_to) - log d_i(eta_from) = log1p(delta*(2p-1)/d_i(eta_from));
    // summing these keeps tiny increments above the noise floor of the two
    // full log-likelihood sums.
    KahanSum acc;
    for (double p : batch.p_star) {
        acc.add(std::log1p(delta * (2.0 * p - 1.0) / mix_density(p, eta_from)));
    }
    return acc.value();
}

double derivative_identity_residual(const CalibratedBatch& batch, double eta) {
    eta = clamp_prob(eta);
    const double lhs = loglik_deriv(batch, eta);
    const double n = static_cast<double>(batch.size());
    const double rhs = n / (eta * (1.0 - eta)) * (operator_T(batch, eta) - eta);
    return std::fabs(lhs - rhs);
}

double fixed_point_residual_at_truth(const CalibratedBatch& batch,
                                     double eta_star) {
    return std::fabs(operator_T(batch, eta_star) - clamp_prob(eta_star));
}

void write_trajectory_csv(const std::string& path, const CalibratedBatch& batch,
                          const FixedPointResult& result,
                          const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open trajectory file: " + path);
    }
    out.precision(17);
    if (!header_comment.empty()) {
        out << "# " << header_comment << "\n";
    }
    out << "t,eta_t,loglik_t,residual_t\n";
    for (std::size_t t = 0; t < result.trajectory.size(); ++t) {
        const double eta = result.trajectory[t];
        out << t << ',' << eta << ',' << loglik_eta(batch, eta) << ','
            << std::fabs(operator_T(batch, eta) - eta) << "\n";
    }
}

}  // namespace lcpo
