#include <doctest.h>

#include <cmath>
#include <random>

#include "lcpo/losses.hpp"
#include "lcpo/math_util.hpp"

using namespace lcpo;

namespace {

ScorePair pair_with_margin(double margin) {
    ScorePair s;
    s.logp_w = margin;
    s.logp_l = 0.0;
    return s;
}

ScorePair random_pair(SplitMix64& rng) {
    std::normal_distribution<double> scores(0.0, 2.0);
    std::uniform_int_distribution<int> lens(1, 50);
    ScorePair s;
    s.logp_w = scores(rng);
    s.logp_l = scores(rng);
    s.ref_logp_w = scores(rng);
    s.ref_logp_l = scores(rng);
    s.len_w = lens(rng);
    s.len_l = lens(rng);
    return s;
}

LossSpec random_spec(LossKind kind, SplitMix64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LossSpec spec;
    spec.kind = kind;
    spec.beta = std::exp(std::uniform_real_distribution<double>(
        std::log(0.01), std::log(5.0))(rng));
    spec.gamma = 2.0 * unit(rng) - 1.0;
    return spec;
}

constexpr LossKind kAllKinds[] = {LossKind::DPO, LossKind::IPO, LossKind::SimPO,
                                  LossKind::CPO};

// Central finite difference of loss_forward along one score coordinate.
double fd_partial(const LossSpec& spec, const ScorePair& s, bool wrt_winner) {
    const double step = 1e-5;
    ScorePair hi = s, lo = s;
    if (wrt_winner) {
        hi.logp_w += step;
        lo.logp_w -= step;
    } else {
        hi.logp_l += step;
        lo.logp_l -= step;
    }
    return (loss_forward(spec, hi) - loss_forward(spec, lo)) / (2.0 * step);
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-3});
}

}  // namespace

TEST_CASE("loss_forward matches hand-computed values") {
    SUBCASE("zero-margin symmetry gives log 2") {
        LossSpec spec;
        CHECK(loss_forward(spec, ScorePair{}) ==
              doctest::Approx(0.6931471805599453).epsilon(1e-12));
    }
    SUBCASE("margin exactly at the quadratic target gives 0") {
        LossSpec spec{LossKind::IPO, 0.5, 0.0};
        CHECK(loss_forward(spec, pair_with_margin(1.0)) ==
              doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("small beta times large margin") {
        LossSpec spec{LossKind::DPO, 0.01, 0.0};
        CHECK(loss_forward(spec, pair_with_margin(100.0)) ==
              doctest::Approx(0.3132616875182228).epsilon(1e-12));
    }
    SUBCASE("length-normalized logistic value") {
        LossSpec spec{LossKind::SimPO, 2.0, 0.5};
        ScorePair s;
        s.logp_w = 3.0;
        s.len_w = 6;
        s.logp_l = 4.0;
        s.len_l = 8;
        // rewards 1.0 and 1.0, shifted margin -0.5
        CHECK(loss_forward(spec, s) ==
              doctest::Approx(0.9740769841801067).epsilon(1e-12));
    }
    SUBCASE("pairwise loss plus pair-normalized likelihood term") {
        LossSpec spec{LossKind::CPO, 2.0, 0.0};
        const ScorePair s = pair_with_margin(1.0);
        CHECK(loss_forward(spec, s) ==
              doctest::Approx(softplus(-2.0) + softplus(-1.0)).epsilon(1e-12));
    }
}

TEST_CASE("loss_reverse swaps winner and loser roles") {
    SUBCASE("symmetric scores make both orientations equal") {
        ScorePair s;
        s.logp_w = s.logp_l = 1.2;
        s.ref_logp_w = s.ref_logp_l = -0.3;
        s.len_w = s.len_l = 7;
        for (LossKind kind : kAllKinds) {
            LossSpec spec{kind, 0.7, 0.2};
            CHECK(loss_reverse(spec, s) ==
                  doctest::Approx(loss_forward(spec, s)).epsilon(1e-12));
        }
    }
    SUBCASE("logistic value at negated margin") {
        LossSpec spec;
        CHECK(loss_reverse(spec, pair_with_margin(2.0)) ==
              doctest::Approx(2.1269280110429727).epsilon(1e-12));
    }
    SUBCASE("quadratic value at negated margin") {
        LossSpec spec{LossKind::IPO, 0.5, 0.0};
        CHECK(loss_reverse(spec, pair_with_margin(1.0)) ==
              doctest::Approx(4.0).epsilon(1e-12));
    }
}

TEST_CASE("pref_probability maps losses to calibrated probabilities") {
    SUBCASE("fully symmetric pair is a coin flip for every kind") {
        ScorePair s;
        s.logp_w = s.logp_l = 0.4;
        s.ref_logp_w = s.ref_logp_l = 0.1;
        for (LossKind kind : kAllKinds) {
            LossSpec spec{kind, 1.3, 0.0};
            CHECK(pref_probability(spec, s) ==
                  doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    SUBCASE("logistic margin ln 3 gives 3/4") {
        LossSpec spec;
        CHECK(pref_probability(spec, pair_with_margin(std::log(3.0))) ==
              doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("quadratic loss reduces to sigmoid of 2h/beta") {
        LossSpec spec{LossKind::IPO, 0.5, 0.0};
        CHECK(pref_probability(spec, pair_with_margin(0.25)) ==
              doctest::Approx(0.7310585786300049).epsilon(1e-12));
    }
    SUBCASE("normalization: forward and reverse probabilities sum to 1") {
        SplitMix64 rng(11);
        for (LossKind kind : kAllKinds) {
            for (int i = 0; i < 250; ++i) {
                const LossSpec spec = random_spec(kind, rng);
                const ScorePair s = random_pair(rng);
                const double total = pref_probability(spec, s) +
                                     pref_probability(spec, s.swapped());
                CHECK(std::fabs(total - 1.0) <= 1e-12);
            }
        }
    }
    SUBCASE("quadratic closed form holds on random inputs") {
        SplitMix64 rng(12);
        for (int i = 0; i < 1000; ++i) {
            const LossSpec spec = random_spec(LossKind::IPO, rng);
            const ScorePair s = random_pair(rng);
            const double h = (s.logp_w - s.ref_logp_w) - (s.logp_l - s.ref_logp_l);
            CHECK(std::fabs(pref_probability(spec, s) -
                            sigmoid(2.0 * h / spec.beta)) <= 1e-9);
        }
    }
    SUBCASE("pair-normalized closed form holds on random inputs") {
        SplitMix64 rng(13);
        for (int i = 0; i < 1000; ++i) {
            const LossSpec spec = random_spec(LossKind::CPO, rng);
            const ScorePair s = random_pair(rng);
            const double m = s.logp_w - s.logp_l;
            CHECK(std::fabs(pref_probability(spec, s) -
                            sigmoid((spec.beta + 1.0) * m)) <= 1e-9);
        }
    }
}

TEST_CASE("bt_consistency: two routes to the same probability") {
    LossSpec spec;
    SUBCASE("symmetric pair gives zero residual") {
        ScorePair s;
        CHECK(bt_consistency(spec, s) == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("hand-picked margins stay under the contract bound") {
        spec.beta = 0.01;
        CHECK(bt_consistency(spec, pair_with_margin(100.0)) <= 1e-9);
        spec.beta = 1.0;
        CHECK(bt_consistency(spec, pair_with_margin(-5.0)) <= 1e-9);
    }
    SUBCASE("1000 random inputs stay under the contract bound") {
        SplitMix64 rng(14);
        for (int i = 0; i < 1000; ++i) {
            const LossSpec rspec = random_spec(LossKind::DPO, rng);
            CHECK(bt_consistency(rspec, random_pair(rng)) <= 1e-9);
        }
    }
    SUBCASE("rejects non-logistic kinds") {
        spec.kind = LossKind::IPO;
        CHECK_THROWS_AS(bt_consistency(spec, ScorePair{}), std::invalid_argument);
    }
}

TEST_CASE("loss_gradient: closed forms against finite differences") {
    SUBCASE("logistic gradient at zero margin") {
        LossSpec spec;
        const ScoreGrad g = loss_gradient(spec, ScorePair{});
        CHECK(g.d_logp_w == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(g.d_logp_l == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("quadratic gradient vanishes at its minimum") {
        LossSpec spec{LossKind::IPO, 0.5, 0.0};
        const ScoreGrad g = loss_gradient(spec, pair_with_margin(1.0));
        CHECK(g.d_logp_w == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(g.d_logp_l == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("1000 random inputs per kind match central differences") {
        SplitMix64 rng(15);
        for (LossKind kind : kAllKinds) {
            double worst = 0.0;
            for (int i = 0; i < 1000; ++i) {
                const LossSpec spec = random_spec(kind, rng);
                const ScorePair s = random_pair(rng);
                const ScoreGrad g = loss_gradient(spec, s);
                worst = std::max(worst, rel_err(g.d_logp_w, fd_partial(spec, s, true)));
                worst = std::max(worst, rel_err(g.d_logp_l, fd_partial(spec, s, false)));
            }
            INFO("kind = ", loss_kind_name(kind));
            CHECK(worst <= 1e-5);
        }
    }
}

TEST_CASE("monotonicity: raising the winner score lowers the logistic losses") {
    for (LossKind kind : {LossKind::DPO, LossKind::SimPO}) {
        LossSpec spec{kind, 0.8, 0.3};
        ScorePair s = pair_with_margin(-1.0);
        s.len_w = 4;
        s.len_l = 9;
        double prev = loss_forward(spec, s);
        for (int i = 0; i < 20; ++i) {
            s.logp_w += 0.5;
            const double cur = loss_forward(spec, s);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("numeric overflow is reported with the offending term") {
    LossSpec spec{LossKind::IPO, 1.0, 0.0};
    ScorePair s;
    s.logp_w = 1e200;
    s.logp_l = -1e200;
    CHECK_THROWS_WITH_AS(loss_forward(spec, s),
                         doctest::Contains("numeric overflow"), NumericError);
}

TEST_CASE("input validation") {
    LossSpec spec;
    spec.beta = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.beta = 1.0;
    spec.gamma = std::nan("");
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    ScorePair s;
    s.len_w = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.len_w = 1;
    s.logp_w = std::nan("");
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
