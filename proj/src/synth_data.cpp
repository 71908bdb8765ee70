#include "lcpo/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "lcpo/math_util.hpp"

namespace lcpo {

void GeneratorSpec::validate() const {
    if (n_pairs < 0) throw std::invalid_argument("n_pairs must be >= 0");
    if (k_annotators < 1) throw std::invalid_argument("k_annotators must be >= 1");
    if (static_cast<int>(eta_true.size()) != k_annotators) {
        throw std::invalid_argument("eta_true must have one entry per annotator");
    }
    for (double e : eta_true) {
        if (!(e > 0.0 && e <= 1.0)) {
            throw std::invalid_argument("eta_true entries must be in (0, 1]");
        }
    }
    if (!annotator_frequencies.empty()) {
        if (static_cast<int>(annotator_frequencies.size()) != k_annotators) {
            throw std::invalid_argument("annotator_frequencies size must equal k_annotators");
        }
        const double total = std::accumulate(annotator_frequencies.begin(),
                                             annotator_frequencies.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-12) {
            throw std::invalid_argument("annotator_frequencies must sum to 1");
        }
        for (double f : annotator_frequencies) {
            if (f < 0.0) throw std::invalid_argument("annotator_frequencies must be >= 0");
        }
    }
    if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
    if (p_star_law == PStarLaw::FromThetaStar) {
        if (static_cast<int>(theta_star.size()) != feature_dim) {
            throw std::invalid_argument("theta_star must have feature_dim entries");
        }
        if (!(gen_beta > 0.0)) throw std::invalid_argument("gen_beta must be > 0");
    } else {
        if (!(beta_a > 0.0 && beta_b > 0.0)) {
            throw std::invalid_argument("beta_a and beta_b must be > 0");
        }
    }
    if (len_lo < 1 || len_hi < len_lo) {
        throw std::invalid_argument("length range must satisfy 1 <= len_lo <= len_hi");
    }
}

namespace {

int pick_annotator(const GeneratorSpec& spec, double u) {
    if (spec.annotator_frequencies.empty()) {
        const int k = std::min<int>(spec.k_annotators - 1,
                                    static_cast<int>(u * spec.k_annotators));
        return k;
    }
    double acc = 0.0;
    for (int k = 0; k < spec.k_annotators; ++k) {
        acc += spec.annotator_frequencies[k];
        if (u < acc) return k;
    }
    return spec.k_annotators - 1;
}

// gamma-based Beta sampler; std::gamma_distribution is deterministic for a
// fixed engine, which is all we need.
double sample_beta(SplitMix64& rng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

}  // namespace

Dataset generate(const GeneratorSpec& spec) {
    spec.validate();
    Dataset out;
    out.reserve(static_cast<std::size_t>(spec.n_pairs));

    for (std::int64_t i = 0; i < spec.n_pairs; ++i) {
        SplitMix64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> normal(0.0, 1.0);

        PreferencePair pair;
        pair.id = i;
        pair.annotator_id = pick_annotator(spec, unit(rng));

        std::vector<double> phi_a(spec.feature_dim), phi_b(spec.feature_dim);
        for (double& v : phi_a) v = normal(rng);
        for (double& v : phi_b) v = normal(rng);
        std::uniform_int_distribution<int> len_dist(spec.len_lo, spec.len_hi);
        const int len_a = len_dist(rng);
        const int len_b = len_dist(rng);

        // q = p(a is collectively preferred over b)
        double q;
        if (spec.p_star_law == PStarLaw::FromThetaStar) {
            double margin = 0.0;
            for (int j = 0; j < spec.feature_dim; ++j) {
                margin += spec.theta_star[j] * (phi_a[j] - phi_b[j]);
            }
            q = sigmoid(spec.gen_beta * margin);
        } else {
            q = sample_beta(rng, spec.beta_a, spec.beta_b);
        }
        q = clamp_prob(q);

        const bool a_truly_wins = unit(rng) < q;
        const bool label_correct = unit(rng) < spec.eta_true[pair.annotator_id];
        const bool a_observed_wins = a_truly_wins == label_correct;

        if (a_observed_wins) {
            pair.features = Features{phi_a, phi_b, len_a, len_b};
        } else {
            pair.features = Features{phi_b, phi_a, len_b, len_a};
        }
        // Probability that the STORED winner is the collective preference.
        pair.p_star_true = a_observed_wins ? q : 1.0 - q;
        pair.z_true = label_correct ? 1 : 0;
        pair.flipped = !label_correct;
        out.push_back(std::move(pair));
    }
    return out;
}

Dataset inject_noise(const Dataset& dataset, double flip_fraction,
                     std::uint64_t seed) {
    if (flip_fraction < 0.0 || flip_fraction > 1.0) {
        throw std::invalid_argument("flip_fraction must be in [0, 1]");
    }
    Dataset out = dataset;
    for (std::size_t i = 0; i < out.size(); ++i) {
        SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(out[i].id) + 0x517cc1b7ULL));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < flip_fraction) {
            PreferencePair& p = out[i];
            std::swap(p.features.phi_w, p.features.phi_l);
            std::swap(p.features.len_w, p.features.len_l);
            if (p.p_star_true) p.p_star_true = 1.0 - *p.p_star_true;
            if (p.z_true) p.z_true = 1 - *p.z_true;
            if (p.flipped) p.flipped = !*p.flipped;
        }
    }
    return out;
}

double effective_reliability(double eta, double flip_fraction) {
    return eta * (1.0 - flip_fraction) + (1.0 - eta) * flip_fraction;
}

std::map<int, Dataset> split_by_annotator(const Dataset& dataset) {
    std::map<int, Dataset> groups;
    for (const PreferencePair& p : dataset) {
        groups[p.annotator_id].push_back(p);
    }
    return groups;
}

std::vector<double> true_p_star(const Dataset& dataset, int annotator_id) {
    std::vector<double> out;
    for (const PreferencePair& p : dataset) {
        if (annotator_id >= 0 && p.annotator_id != annotator_id) continue;
        if (!p.p_star_true) {
            throw std::invalid_argument("pair lacks ground-truth p_star");
        }
        out.push_back(*p.p_star_true);
    }
    return out;
}

}  // namespace lcpo
