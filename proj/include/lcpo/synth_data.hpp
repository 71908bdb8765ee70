#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcpo/score_model.hpp"

namespace lcpo {

/// One annotated comparison. The stored orientation is the annotation:
/// phi_w belongs to the response the annotator marked as winner, which may
/// disagree with the latent collective preference.
///
/// The debug fields carry generative ground truth. Training code never
/// reads them; they exist so verification suites can score estimates
/// against the truth.
struct PreferencePair {
    std::int64_t id = 0;
    int annotator_id = 0;
    Features features;
    // Probability that the stored orientation matches the collective
    // preference, under the generating process.
    std::optional<double> p_star_true;
    // 1 if the stored orientation equals the drawn collective direction.
    std::optional<int> z_true;
    std::optional<bool> flipped;
};

using Dataset = std::vector<PreferencePair>;

enum class PStarLaw { FromThetaStar, BetaDistribution };

struct GeneratorSpec {
    std::int64_t n_pairs = 0;
    int k_annotators = 1;
    std::vector<double> eta_true;
    std::vector<double> annotator_frequencies;  // defaults to uniform
    int feature_dim = 8;
    PStarLaw p_star_law = PStarLaw::BetaDistribution;
    std::vector<double> theta_star;  // required for FromThetaStar
    double gen_beta = 1.0;           // margin scale in FromThetaStar mode
    double beta_a = 2.0;             // Beta(a,b) shape for the p* law
    double beta_b = 2.0;
    int len_lo = 8;                  // token lengths drawn uniformly
    int len_hi = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Draws a synthetic preference dataset. For each pair: annotator by
/// frequency, standard-normal features, ground-truth preference
/// probability by the configured law, collective direction ~ Bernoulli(p*),
/// label correctness ~ Bernoulli(eta_k). The stored orientation is the
/// collective direction when the label is correct, flipped otherwise.
/// Deterministic in the seed; every pair has its own derived RNG stream.
Dataset generate(const GeneratorSpec& spec);

/// Independently flips each pair's stored orientation with probability
/// flip_fraction. Ground-truth fields are updated consistently.
Dataset inject_noise(const Dataset& dataset, double flip_fraction,
                     std::uint64_t seed);

/// Agreement probability of a copy after independent flips with
/// probability f: eta * (1-f) + (1-eta) * f.
double effective_reliability(double eta, double flip_fraction);

/// Partition into per-annotator lists, preserving order within each.
std::map<int, Dataset> split_by_annotator(const Dataset& dataset);

/// Ground-truth preference probabilities of the stored orientations,
/// optionally restricted to one annotator (annotator_id < 0 selects all).
/// Throws if any selected pair lacks ground truth.
std::vector<double> true_p_star(const Dataset& dataset, int annotator_id = -1);

// -- Dataset file format (JSON lines, one pair per line) --

/// Writes pairs as JSONL with keys in the fixed order
/// {id, annotator_id, phi_w, phi_l, len_w, len_l, debug}.
void write_jsonl(const std::string& path, const Dataset& dataset);

std::string to_jsonl(const Dataset& dataset);

/// Reads a JSONL dataset; unknown keys are ignored.
Dataset read_jsonl(const std::string& path);

Dataset parse_jsonl(const std::string& text);

}  // namespace lcpo
