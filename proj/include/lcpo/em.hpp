#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcpo/losses.hpp"
#include "lcpo/score_model.hpp"
#include "lcpo/synth_data.hpp"

namespace lcpo {

/// Reliability estimates and label counts, one slot per annotator id in
/// [0, K). Estimates are kept clamped to [1e-6, 1-1e-6].
struct AnnotatorTable {
    std::vector<double> eta;
    std::vector<std::int64_t> counts;

    static AnnotatorTable init(int k_annotators, double eta_init);

    int size() const { return static_cast<int>(eta.size()); }
    /// Bounds-checked lookup; throws on an unknown annotator id.
    double eta_at(int k) const;
};

enum class EtaUpdateMode {
    EmaPerBatch,        // soft update after every batch
    ClosedFormPerEpoch  // average confidence over the whole epoch
};

struct EmConfig {
    double eta_init = 0.9;
    double alpha = 0.1;
    EtaUpdateMode update_mode = EtaUpdateMode::EmaPerBatch;
    // Skips the E-step entirely (every confidence is 1) and pins the
    // reliabilities. This is the plain-training ablation baseline.
    bool unit_weights = false;
    // Records theta after every optimizer step into TrainResult::theta_trace.
    bool record_trace = false;

    void validate() const;
};

/// Per-pair label confidences for one batch, aligned with the batch order.
struct BatchWeights {
    std::vector<double> w;
    std::vector<std::int64_t> pair_ids;
};

/// Posterior probability that an annotated label is correct. Both inputs
/// are clamped to [1e-6, 1-1e-6] before the posterior is formed, so the
/// result is always a valid probability.
double e_step_weight(double p_star, double eta_k);

/// Confidence of every pair in the batch under the current policy: compute
/// the model preference probability of the stored orientation, then the
/// posterior against that pair's annotator reliability. Throws on an
/// annotator id outside the table.
BatchWeights batch_e_step(const PolicyParams& params,
                          std::span<const PreferencePair> pairs,
                          const LossSpec& spec, const AnnotatorTable& table);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Confidence-weighted preference loss over the batch,
/// -sum_i [w_i log p_i + (1-w_i) log(1-p_i)] with p_i the model preference
/// probability of the stored orientation, plus its exact gradient in theta.
/// Weights are constants; no gradient flows through them.
LossAndGrad lcpo_loss(const BatchWeights& weights, const PolicyParams& params,
                      std::span<const PreferencePair> pairs,
                      const LossSpec& spec);

/// Maximum-likelihood reliability given posterior confidences: their mean,
/// clamped. Throws "annotator has no labels" on an empty span.
double eta_closed_form(std::span<const double> weights);

/// EMA reliability update for annotator k from one batch:
/// eta_k <- (1-alpha) * eta_k + alpha * mean(w_i over k's pairs in batch).
/// A batch containing none of k's pairs leaves the table unchanged.
void eta_ema_update(AnnotatorTable& table, int k, const BatchWeights& weights,
                    std::span<const PreferencePair> pairs, double alpha);

/// One metrics row per processed batch; eta is the table state after the
/// batch's reliability update.
struct MetricsRow {
    int epoch = 0;
    int batch = 0;
    double mean_loss = 0.0;
    double mean_w = 0.0;
    std::vector<double> eta;
};

struct TrainResult {
    PolicyParams params;
    AnnotatorTable table;
    std::vector<MetricsRow> metrics;
    std::vector<std::vector<double>> theta_trace;  // filled when record_trace
};

/// Full training loop. Per epoch, per batch: E-step with the pre-batch
/// policy, gradient step on the weighted loss (batch-mean gradient), then
/// the reliability update for every annotator present. The dataset order
/// is reshuffled each epoch from the optimizer seed; a single full-size
/// batch keeps the stored order. Deterministic given the seed. Throws
/// NumericError (with epoch/batch location) if the loss turns non-finite.
TrainResult run_lcpo(const Dataset& dataset, PolicyParams params,
                     const LossSpec& spec, const EmConfig& em,
                     const OptimizerConfig& opt);

/// Reference trainer minimizing the raw preference loss (no confidences,
/// no reliability tracking). Shares the shuffling and batching logic with
/// run_lcpo so trajectories are comparable batch for batch.
TrainResult run_plain(const Dataset& dataset, PolicyParams params,
                      const LossSpec& spec, const OptimizerConfig& opt,
                      bool record_trace = false);

/// Fraction of pairs whose stored orientation the model prefers; an exact
/// tie (probability 0.5) counts half.
double preference_accuracy(const PolicyParams& params, const LossSpec& spec,
                           const Dataset& dataset);

/// Writes metrics as CSV with columns epoch,batch,mean_loss,mean_w,
/// eta_1..eta_K. header_comment, when nonempty, is emitted first as a
/// '#' line.
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& metrics,
                       const std::string& header_comment = "");

}  // namespace lcpo
