#include "lcpo/losses.hpp"

#include <cmath>

#include "lcpo/math_util.hpp"

namespace lcpo {

namespace {

void check_finite(double value, const char* term) {
    if (!std::isfinite(value)) {
        throw NumericError(std::string("numeric overflow in ") + term);
    }
}

// Reference-adjusted margin used by DPO and IPO.
double ref_margin(const ScorePair& s) {
    return (s.logp_w - s.ref_logp_w) - (s.logp_l - s.ref_logp_l);
}

// Length-normalized SimPO reward difference, before the gamma shift.
double simpo_margin(const LossSpec& spec, const ScorePair& s) {
    return spec.beta * s.logp_w / static_cast<double>(s.len_w) -
           spec.beta * s.logp_l / static_cast<double>(s.len_l);
}

}  // namespace

const char* loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::DPO: return "dpo";
        case LossKind::IPO: return "ipo";
        case LossKind::SimPO: return "simpo";
        case LossKind::CPO: return "cpo";
    }
    return "?";
}

void LossSpec::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("LossSpec.beta must be a positive finite real");
    }
    if (!std::isfinite(gamma)) {
        throw std::invalid_argument("LossSpec.gamma must be finite");
    }
}

void ScorePair::validate() const {
    if (!std::isfinite(logp_w) || !std::isfinite(logp_l) ||
        !std::isfinite(ref_logp_w) || !std::isfinite(ref_logp_l)) {
        throw std::invalid_argument("ScorePair scores must be finite");
    }
    if (len_w < 1 || len_l < 1) {
        throw std::invalid_argument("ScorePair lengths must be >= 1");
    }
}

double loss_forward(const LossSpec& spec, const ScorePair& s) {
    switch (spec.kind) {
        case LossKind::DPO: {
            const double loss = softplus(-spec.beta * ref_margin(s));
            check_finite(loss, "DPO logistic term");
            return loss;
        }
        case LossKind::IPO: {
            const double t = ref_margin(s) - 1.0 / (2.0 * spec.beta);
            const double loss = t * t;
            check_finite(loss, "IPO squared margin term");
            return loss;
        }
        case LossKind::SimPO: {
            const double loss = softplus(-(simpo_margin(spec, s) - spec.gamma));
            check_finite(loss, "SimPO logistic term");
            return loss;
        }
        case LossKind::CPO: {
            const double m = s.logp_w - s.logp_l;
            const double logistic = softplus(-spec.beta * m);
            check_finite(logistic, "CPO logistic term");
            // NLL of the winner under the pair-normalized policy,
            // -log softmax(logp_w over {w, l}) = softplus(-m).
            const double nll = softplus(-m);
            check_finite(nll, "CPO likelihood term");
            return logistic + nll;
        }
    }
    throw std::invalid_argument("unknown loss kind");
}

double loss_reverse(const LossSpec& spec, const ScorePair& s) {
    return loss_forward(spec, s.swapped());
}

double pref_logit(const LossSpec& spec, const ScorePair& s) {
    return loss_reverse(spec, s) - loss_forward(spec, s);
}

double pref_probability(const LossSpec& spec, const ScorePair& s) {
    return sigmoid(pref_logit(spec, s));
}

double bt_consistency(const LossSpec& spec, const ScorePair& s) {
    if (spec.kind != LossKind::DPO) {
        throw std::invalid_argument("bt_consistency requires the DPO loss");
    }
    const double direct = sigmoid(spec.beta * ref_margin(s));
    return std::abs(pref_probability(spec, s) - direct);
}

ScoreGrad loss_gradient(const LossSpec& spec, const ScorePair& s) {
    switch (spec.kind) {
        case LossKind::DPO: {
            const double h = ref_margin(s);
            const double d = -spec.beta * sigmoid(-spec.beta * h);
            return {d, -d};
        }
        case LossKind::IPO: {
            const double t = ref_margin(s) - 1.0 / (2.0 * spec.beta);
            return {2.0 * t, -2.0 * t};
        }
        case LossKind::SimPO: {
            const double u = simpo_margin(spec, s) - spec.gamma;
            const double du = -sigmoid(-u);
            return {du * spec.beta / static_cast<double>(s.len_w),
                    -du * spec.beta / static_cast<double>(s.len_l)};
        }
        case LossKind::CPO: {
            const double m = s.logp_w - s.logp_l;
            const double d = -spec.beta * sigmoid(-spec.beta * m) - sigmoid(-m);
            return {d, -d};
        }
    }
    throw std::invalid_argument("unknown loss kind");
}

}  // namespace lcpo
