#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lcpo/losses.hpp"

namespace lcpo {

/// Feature vectors and token lengths of the two responses of a pair,
/// annotated winner first.
struct Features {
    std::vector<double> phi_w;
    std::vector<double> phi_l;
    int len_w = 1;
    int len_l = 1;
};

/// Linear policy: log-score of a response is theta . phi. The reference
/// parameters are fixed at construction and never change afterwards.
class PolicyParams {
  public:
    PolicyParams() = default;
    PolicyParams(std::vector<double> theta, std::vector<double> theta_ref);

    /// Zero-initialized policy with a zero reference (the uncertain-start
    /// regime where every preference probability is 0.5).
    static PolicyParams zeros(std::size_t dim);

    std::size_t dim() const { return theta_.size(); }
    std::vector<double>& theta() { return theta_; }
    const std::vector<double>& theta() const { return theta_; }
    const std::vector<double>& theta_ref() const { return theta_ref_; }

  private:
    std::vector<double> theta_;
    std::vector<double> theta_ref_;
};

// learning_rate 0 freezes the policy (reliability estimation only).
struct OptimizerConfig {
    double learning_rate = 0.05;
    int epochs = 50;
    int batch_size = 64;
    std::uint64_t seed = 0;
    double momentum = 0.0;

    void validate() const;
};

/// Policy and reference log-scores for both responses of a pair.
ScorePair score_pair(const PolicyParams& params, const Features& f);

/// Chains score-space partials through the linear model:
/// grad += d_logp_w * phi_w + d_logp_l * phi_l.
void accumulate_gradient(const Features& f, const ScoreGrad& g,
                         std::span<double> grad);

/// Plain gradient-descent step: theta -= learning_rate * grad.
/// velocity, when nonempty, carries momentum state across steps.
void sgd_step(PolicyParams& params, std::span<const double> grad,
              const OptimizerConfig& config,
              std::vector<double>* velocity = nullptr);

}  // namespace lcpo
