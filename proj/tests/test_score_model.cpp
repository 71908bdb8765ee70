#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lcpo/losses.hpp"
#include "lcpo/math_util.hpp"
#include "lcpo/score_model.hpp"

using namespace lcpo;

namespace {

Features random_features(SplitMix64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> lens(1, 40);
    Features f;
    f.phi_w.resize(dim);
    f.phi_l.resize(dim);
    for (double& v : f.phi_w) v = normal(rng);
    for (double& v : f.phi_l) v = normal(rng);
    f.len_w = lens(rng);
    f.len_l = lens(rng);
    return f;
}

double full_loss(const PolicyParams& params, const Features& f,
                 const LossSpec& spec) {
    return loss_forward(spec, score_pair(params, f));
}

}  // namespace

TEST_CASE("score_pair is the linear model") {
    SUBCASE("zero parameters give zero scores") {
        const PolicyParams params = PolicyParams::zeros(3);
        const Features f{{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}, 10, 20};
        const ScorePair s = score_pair(params, f);
        CHECK(s.logp_w == 0.0);
        CHECK(s.logp_l == 0.0);
        CHECK(s.len_w == 10);
        CHECK(s.len_l == 20);
    }
    SUBCASE("dot products flow through") {
        const PolicyParams params({1.0, 0.0}, {0.0, 0.0});
        const Features f{{2.0, 5.0}, {-1.0, 9.0}, 1, 1};
        const ScorePair s = score_pair(params, f);
        CHECK(s.logp_w == doctest::Approx(2.0));
        CHECK(s.logp_l == doctest::Approx(-1.0));
    }
    SUBCASE("policy equal to reference means every pair is a coin flip") {
        const PolicyParams params({0.3, -0.7}, {0.3, -0.7});
        SplitMix64 rng(21);
        LossSpec spec;
        for (int i = 0; i < 50; ++i) {
            const Features f = random_features(rng, 2);
            CHECK(pref_probability(spec, score_pair(params, f)) ==
                  doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    SUBCASE("dimension mismatch is rejected") {
        const PolicyParams params = PolicyParams::zeros(3);
        const Features f{{1.0}, {2.0}, 1, 1};
        CHECK_THROWS_AS(score_pair(params, f), std::invalid_argument);
    }
    SUBCASE("scaling theta scales every margin linearly") {
        SplitMix64 rng(22);
        const Features f = random_features(rng, 4);
        const std::vector<double> theta{0.2, -1.0, 0.5, 2.0};
        std::vector<double> theta3 = theta;
        for (double& v : theta3) v *= 3.0;
        const PolicyParams p1(theta, std::vector<double>(4, 0.0));
        const PolicyParams p3(theta3, std::vector<double>(4, 0.0));
        const ScorePair s1 = score_pair(p1, f);
        const ScorePair s3 = score_pair(p3, f);
        CHECK(s3.logp_w - s3.logp_l ==
              doctest::Approx(3.0 * (s1.logp_w - s1.logp_l)).epsilon(1e-12));
    }
}

TEST_CASE("accumulate_gradient chains score partials through the features") {
    SUBCASE("zero partials contribute nothing") {
        std::vector<double> grad(2, 0.0);
        accumulate_gradient(Features{{1.0, 2.0}, {3.0, 4.0}, 1, 1},
                            ScoreGrad{0.0, 0.0}, grad);
        CHECK(grad[0] == 0.0);
        CHECK(grad[1] == 0.0);
    }
    SUBCASE("basis features expose the partials directly") {
        std::vector<double> grad(2, 0.0);
        accumulate_gradient(Features{{1.0, 0.0}, {0.0, 1.0}, 1, 1},
                            ScoreGrad{-0.5, 0.5}, grad);
        CHECK(grad[0] == doctest::Approx(-0.5));
        CHECK(grad[1] == doctest::Approx(0.5));
    }
    SUBCASE("random instances match finite differences of the full loss") {
        SplitMix64 rng(23);
        std::normal_distribution<double> normal(0.0, 0.5);
        for (LossKind kind : {LossKind::DPO, LossKind::IPO, LossKind::SimPO,
                              LossKind::CPO}) {
            LossSpec spec{kind, 0.4, 0.1};
            std::vector<double> theta(5), theta_ref(5);
            for (double& v : theta) v = normal(rng);
            for (double& v : theta_ref) v = normal(rng);
            PolicyParams params(theta, theta_ref);
            const Features f = random_features(rng, 5);

            std::vector<double> grad(5, 0.0);
            accumulate_gradient(f, loss_gradient(spec, score_pair(params, f)),
                                grad);

            const double step = 1e-5;
            for (std::size_t j = 0; j < 5; ++j) {
                PolicyParams hi = params, lo = params;
                hi.theta()[j] += step;
                lo.theta()[j] -= step;
                const double fd = (full_loss(hi, f, spec) - full_loss(lo, f, spec)) /
                                  (2.0 * step);
                const double denom = std::max({std::fabs(grad[j]), std::fabs(fd), 1e-3});
                CHECK(std::fabs(grad[j] - fd) / denom <= 1e-5);
            }
        }
    }
}

TEST_CASE("sgd_step") {
    OptimizerConfig config;
    SUBCASE("zero gradient leaves parameters untouched") {
        PolicyParams params({1.0, -2.0}, {0.0, 0.0});
        const std::vector<double> grad(2, 0.0);
        sgd_step(params, grad, config);
        CHECK(params.theta()[0] == 1.0);
        CHECK(params.theta()[1] == -2.0);
    }
    SUBCASE("plain arithmetic") {
        config.learning_rate = 0.1;
        PolicyParams params({1.0, 1.0}, {0.0, 0.0});
        const std::vector<double> grad{10.0, -10.0};
        sgd_step(params, grad, config);
        CHECK(params.theta()[0] == doctest::Approx(0.0));
        CHECK(params.theta()[1] == doctest::Approx(2.0));
    }
    SUBCASE("reference parameters never move") {
        config.learning_rate = 0.5;
        PolicyParams params({1.0}, {0.25});
        const std::vector<double> grad{3.0};
        for (int i = 0; i < 100; ++i) sgd_step(params, grad, config);
        CHECK(params.theta_ref()[0] == 0.25);
    }
    SUBCASE("descent on a convex logistic objective reaches a stationary point") {
        // fixed-weight DPO objective over a few pairs is convex in theta
        SplitMix64 rng(24);
        LossSpec spec;
        std::vector<Features> data;
        for (int i = 0; i < 16; ++i) data.push_back(random_features(rng, 3));

        PolicyParams params = PolicyParams::zeros(3);
        OptimizerConfig opt;
        opt.learning_rate = 0.05;  // below 2/L for this objective
        double prev = 1e300;
        double grad_norm = 1e300;
        for (int it = 0; it < 20000 && grad_norm >= 1e-6; ++it) {
            std::vector<double> grad(3, 0.0);
            double total = 0.0;
            for (const Features& f : data) {
                const ScorePair s = score_pair(params, f);
                total += loss_forward(spec, s);
                accumulate_gradient(f, loss_gradient(spec, s), grad);
            }
            CHECK(total < prev + 1e-12);
            prev = total;
            grad_norm = 0.0;
            for (double g : grad) grad_norm = std::max(grad_norm, std::fabs(g));
            sgd_step(params, grad, opt);
        }
        CHECK(grad_norm < 1e-6);
    }
}

TEST_CASE("PolicyParams construction rules") {
    CHECK_THROWS_AS(PolicyParams({1.0, 2.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(PolicyParams({std::nan("")}, {0.0}), std::invalid_argument);
    const PolicyParams z = PolicyParams::zeros(4);
    CHECK(z.dim() == 4);
    CHECK(z.theta_ref() == std::vector<double>(4, 0.0));
}
