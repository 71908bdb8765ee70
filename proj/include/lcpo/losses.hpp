#pragma once

#include <stdexcept>
#include <string>

namespace lcpo {

/// Raised when a loss evaluation produces a non-finite intermediate.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LossKind { DPO, IPO, SimPO, CPO };

const char* loss_kind_name(LossKind kind);

/// Which preference loss to evaluate and its hyperparameters.
/// beta scales the margin; gamma is the SimPO target margin and is
/// ignored by the other kinds.
struct LossSpec {
    LossKind kind = LossKind::DPO;
    double beta = 1.0;
    double gamma = 0.0;

    void validate() const;
};

/// Policy and reference log-scores for one annotated pair, winner first.
/// Reference scores are ignored by SimPO and CPO; token lengths are only
/// consulted by SimPO.
struct ScorePair {
    double logp_w = 0.0;
    double logp_l = 0.0;
    double ref_logp_w = 0.0;
    double ref_logp_l = 0.0;
    int len_w = 1;
    int len_l = 1;

    /// Same pair with winner and loser roles exchanged.
    ScorePair swapped() const {
        return {logp_l, logp_w, ref_logp_l, ref_logp_w, len_l, len_w};
    }

    void validate() const;
};

/// Partial derivatives of a loss with respect to the two policy log-scores.
struct ScoreGrad {
    double d_logp_w = 0.0;
    double d_logp_l = 0.0;
};

/// Preference loss of the annotated orientation (winner over loser).
double loss_forward(const LossSpec& spec, const ScorePair& s);

/// Loss of the reversed orientation (loser over winner); equals
/// loss_forward on the role-swapped pair.
double loss_reverse(const LossSpec& spec, const ScorePair& s);

/// Logit of the model's preference probability:
/// loss_reverse - loss_forward.
double pref_logit(const LossSpec& spec, const ScorePair& s);

/// Probability that the annotated winner is truly preferred,
/// sigmoid(loss_reverse - loss_forward). Always in (0,1).
double pref_probability(const LossSpec& spec, const ScorePair& s);

/// |pref_probability - sigmoid(beta * reference-adjusted margin)| for the
/// DPO loss; the two routes agree analytically (Bradley-Terry form), so the
/// residual is pure floating-point noise. Throws if kind != DPO.
double bt_consistency(const LossSpec& spec, const ScorePair& s);

/// Exact partial derivatives of loss_forward with respect to logp_w and
/// logp_l. Reference scores and lengths are treated as constants.
ScoreGrad loss_gradient(const LossSpec& spec, const ScorePair& s);

}  // namespace lcpo
