#include "lcpo/score_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lcpo {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

PolicyParams::PolicyParams(std::vector<double> theta, std::vector<double> theta_ref)
    : theta_(std::move(theta)), theta_ref_(std::move(theta_ref)) {
    if (theta_.size() != theta_ref_.size()) {
        throw std::invalid_argument("theta and theta_ref dimensions differ");
    }
    for (double v : theta_) {
        if (!std::isfinite(v)) throw std::invalid_argument("theta entries must be finite");
    }
    for (double v : theta_ref_) {
        if (!std::isfinite(v)) throw std::invalid_argument("theta_ref entries must be finite");
    }
}

PolicyParams PolicyParams::zeros(std::size_t dim) {
    return PolicyParams(std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0));
}

void OptimizerConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("OptimizerConfig.learning_rate must be >= 0");
    }
    if (epochs < 1) throw std::invalid_argument("OptimizerConfig.epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("OptimizerConfig.batch_size must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw std::invalid_argument("OptimizerConfig.momentum must be in [0, 1)");
    }
}

ScorePair score_pair(const PolicyParams& params, const Features& f) {
    if (f.phi_w.size() != params.dim() || f.phi_l.size() != params.dim()) {
        throw std::invalid_argument("feature dimension does not match policy dimension");
    }
    ScorePair s;
    s.logp_w = dot(params.theta(), f.phi_w);
    s.logp_l = dot(params.theta(), f.phi_l);
    s.ref_logp_w = dot(params.theta_ref(), f.phi_w);
    s.ref_logp_l = dot(params.theta_ref(), f.phi_l);
    s.len_w = f.len_w;
    s.len_l = f.len_l;
    return s;
}

void accumulate_gradient(const Features& f, const ScoreGrad& g,
                         std::span<double> grad) {
    if (grad.size() != f.phi_w.size() || grad.size() != f.phi_l.size()) {
        throw std::invalid_argument("gradient dimension does not match features");
    }
    for (std::size_t j = 0; j < grad.size(); ++j) {
        grad[j] += g.d_logp_w * f.phi_w[j] + g.d_logp_l * f.phi_l[j];
    }
}

void sgd_step(PolicyParams& params, std::span<const double> grad,
              const OptimizerConfig& config, std::vector<double>* velocity) {
    if (grad.size() != params.dim()) {
        throw std::invalid_argument("gradient dimension does not match policy dimension");
    }
    auto& theta = params.theta();
    if (config.momentum > 0.0 && velocity != nullptr) {
        velocity->resize(theta.size(), 0.0);
        for (std::size_t j = 0; j < theta.size(); ++j) {
            (*velocity)[j] = config.momentum * (*velocity)[j] + grad[j];
            theta[j] -= config.learning_rate * (*velocity)[j];
        }
    } else {
        for (std::size_t j = 0; j < theta.size(); ++j) {
            theta[j] -= config.learning_rate * grad[j];
        }
    }
}

}  // namespace lcpo
