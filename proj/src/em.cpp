#include "lcpo/em.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "lcpo/math_util.hpp"

namespace lcpo {

AnnotatorTable AnnotatorTable::init(int k_annotators, double eta_init) {
    if (k_annotators < 1) {
        throw std::invalid_argument("AnnotatorTable: need at least one annotator");
    }
    AnnotatorTable t;
    t.eta.assign(static_cast<std::size_t>(k_annotators), clamp_prob(eta_init));
    t.counts.assign(static_cast<std::size_t>(k_annotators), 0);
    return t;
}

double AnnotatorTable::eta_at(int k) const {
    if (k < 0 || k >= size()) {
        throw std::out_of_range("unknown annotator id " + std::to_string(k));
    }
    return eta[static_cast<std::size_t>(k)];
}

void EmConfig::validate() const {
    if (!(eta_init >= 0.5 && eta_init <= 1.0)) {
        throw std::invalid_argument("EmConfig.eta_init must be in [0.5, 1]");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("EmConfig.alpha must be in (0, 1]");
    }
}

double e_step_weight(double p_star, double eta_k) {
    return posterior_weight(clamp_prob(p_star), clamp_prob(eta_k));
}

BatchWeights batch_e_step(const PolicyParams& params,
                          std::span<const PreferencePair> pairs,
                          const LossSpec& spec, const AnnotatorTable& table) {
    BatchWeights out;
    out.w.reserve(pairs.size());
    out.pair_ids.reserve(pairs.size());
    for (const PreferencePair& pair : pairs) {
        const double eta = table.eta_at(pair.annotator_id);
        const double p = pref_probability(spec, score_pair(params, pair.features));
        out.w.push_back(e_step_weight(p, eta));
        out.pair_ids.push_back(pair.id);
    }
    return out;
}

LossAndGrad lcpo_loss(const BatchWeights& weights, const PolicyParams& params,
                      std::span<const PreferencePair> pairs,
                      const LossSpec& spec) {
    if (weights.w.size() != pairs.size()) {
        throw std::invalid_argument("weights not aligned with batch");
    }
    LossAndGrad out;
    out.grad.assign(params.dim(), 0.0);
    KahanSum loss;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const ScorePair s = score_pair(params, pairs[i].features);
        const double delta = pref_logit(spec, s);  // log-odds of the label
        const double w = weights.w[i];
        loss.add(-(w * log_sigmoid(delta) + (1.0 - w) * log_sigmoid(-delta)));

        // d loss / d delta = p - w; chain through delta = L_rev - L_fwd.
        const ScoreGrad gf = loss_gradient(spec, s);
        const ScoreGrad gr = loss_gradient(spec, s.swapped());
        const double coef = sigmoid(delta) - w;
        const ScoreGrad per_pair{coef * (gr.d_logp_l - gf.d_logp_w),
                                 coef * (gr.d_logp_w - gf.d_logp_l)};
        accumulate_gradient(pairs[i].features, per_pair, out.grad);
    }
    out.loss = loss.value();
    return out;
}

double eta_closed_form(std::span<const double> weights) {
    if (weights.empty()) {
        throw std::invalid_argument("annotator has no labels");
    }
    KahanSum acc;
    for (double w : weights) acc.add(w);
    return clamp_prob(acc.value() / static_cast<double>(weights.size()));
}

void eta_ema_update(AnnotatorTable& table, int k, const BatchWeights& weights,
                    std::span<const PreferencePair> pairs, double alpha) {
    if (weights.w.size() != pairs.size()) {
        throw std::invalid_argument("weights not aligned with batch");
    }
    if (k < 0 || k >= table.size()) {
        throw std::out_of_range("unknown annotator id " + std::to_string(k));
    }
    KahanSum acc;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].annotator_id == k) {
            acc.add(weights.w[i]);
            ++n;
        }
    }
    if (n == 0) return;  // annotator absent from this batch
    const double batch_mean = acc.value() / static_cast<double>(n);
    auto& eta = table.eta[static_cast<std::size_t>(k)];
    eta = clamp_prob((1.0 - alpha) * eta + alpha * batch_mean);
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566666c65ULL;  // "shuffle"

/// Batches are contiguous slices of the epoch order. A run with a single
/// full-size batch keeps the stored dataset order (shuffling a full batch
/// would only permute summation order), which keeps full-batch reliability
/// updates bitwise identical to the averaging-operator iteration.
std::span<const PreferencePair> epoch_view(const Dataset& dataset, int epoch,
                                           std::uint64_t seed, int n_batches,
                                           std::vector<PreferencePair>& scratch) {
    if (n_batches <= 1) {
        return {dataset.data(), dataset.size()};
    }
    scratch = dataset;
    std::mt19937_64 rng(mix_seed(seed, kShuffleStream + static_cast<std::uint64_t>(epoch)));
    std::shuffle(scratch.begin(), scratch.end(), rng);
    return {scratch.data(), scratch.size()};
}

int count_annotators(const Dataset& dataset) {
    int k_max = -1;
    for (const PreferencePair& pair : dataset) {
        if (pair.annotator_id < 0) {
            throw std::invalid_argument("negative annotator id in dataset");
        }
        k_max = std::max(k_max, pair.annotator_id);
    }
    return k_max + 1;
}

double batch_mean(std::span<const double> xs) {
    KahanSum acc;
    for (double x : xs) acc.add(x);
    return acc.value() / static_cast<double>(xs.size());
}

void check_batch_finite(double mean_loss, std::span<const double> grad,
                        int epoch, int batch) {
    bool ok = std::isfinite(mean_loss);
    for (double g : grad) ok = ok && std::isfinite(g);
    if (!ok) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(batch));
    }
}

}  // namespace

TrainResult run_lcpo(const Dataset& dataset, PolicyParams params,
                     const LossSpec& spec, const EmConfig& em,
                     const OptimizerConfig& opt) {
    spec.validate();
    em.validate();
    opt.validate();
    if (dataset.empty()) throw std::invalid_argument("dataset is empty");

    const int k_annotators = count_annotators(dataset);
    AnnotatorTable table = AnnotatorTable::init(k_annotators, em.eta_init);
    for (const PreferencePair& pair : dataset) {
        ++table.counts[static_cast<std::size_t>(pair.annotator_id)];
    }

    const std::size_t n = dataset.size();
    const std::size_t bs = static_cast<std::size_t>(opt.batch_size);
    const int n_batches = static_cast<int>((n + bs - 1) / bs);

    TrainResult res;
    std::vector<double> velocity;
    std::vector<double> mean_grad(params.dim(), 0.0);
    std::vector<PreferencePair> scratch;
    std::vector<std::vector<double>> epoch_w(static_cast<std::size_t>(k_annotators));

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        const auto view = epoch_view(dataset, epoch, opt.seed, n_batches, scratch);
        for (auto& ws : epoch_w) ws.clear();

        for (int b = 0; b < n_batches; ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * bs;
            const std::size_t hi = std::min(lo + bs, n);
            const auto batch = view.subspan(lo, hi - lo);
            const double bn = static_cast<double>(batch.size());

            BatchWeights weights;
            if (em.unit_weights) {
                weights.w.assign(batch.size(), 1.0);
                for (const PreferencePair& pair : batch) {
                    weights.pair_ids.push_back(pair.id);
                }
            } else {
                weights = batch_e_step(params, batch, spec, table);
            }

            const LossAndGrad lg = lcpo_loss(weights, params, batch, spec);
            const double mean_loss = lg.loss / bn;
            for (std::size_t j = 0; j < mean_grad.size(); ++j) {
                mean_grad[j] = lg.grad[j] / bn;
            }
            check_batch_finite(mean_loss, mean_grad, epoch, b);
            sgd_step(params, mean_grad, opt, &velocity);

            if (!em.unit_weights) {
                if (em.update_mode == EtaUpdateMode::EmaPerBatch) {
                    for (int k = 0; k < k_annotators; ++k) {
                        eta_ema_update(table, k, weights, batch, em.alpha);
                    }
                } else {
                    for (std::size_t i = 0; i < batch.size(); ++i) {
                        epoch_w[static_cast<std::size_t>(batch[i].annotator_id)]
                            .push_back(weights.w[i]);
                    }
                    if (b == n_batches - 1) {
                        for (int k = 0; k < k_annotators; ++k) {
                            const auto& ws = epoch_w[static_cast<std::size_t>(k)];
                            if (!ws.empty()) {
                                table.eta[static_cast<std::size_t>(k)] =
                                    eta_closed_form(ws);
                            }
                        }
                    }
                }
            }

            MetricsRow row;
            row.epoch = epoch;
            row.batch = b;
            row.mean_loss = mean_loss;
            row.mean_w = batch_mean(weights.w);
            row.eta = table.eta;
            res.metrics.push_back(std::move(row));
            if (em.record_trace) res.theta_trace.push_back(params.theta());
        }
    }

    res.params = std::move(params);
    res.table = std::move(table);
    return res;
}

TrainResult run_plain(const Dataset& dataset, PolicyParams params,
                      const LossSpec& spec, const OptimizerConfig& opt,
                      bool record_trace) {
    spec.validate();
    opt.validate();
    if (dataset.empty()) throw std::invalid_argument("dataset is empty");

    const std::size_t n = dataset.size();
    const std::size_t bs = static_cast<std::size_t>(opt.batch_size);
    const int n_batches = static_cast<int>((n + bs - 1) / bs);

    TrainResult res;
    std::vector<double> velocity;
    std::vector<double> mean_grad(params.dim(), 0.0);
    std::vector<PreferencePair> scratch;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        const auto view = epoch_view(dataset, epoch, opt.seed, n_batches, scratch);
        for (int b = 0; b < n_batches; ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * bs;
            const std::size_t hi = std::min(lo + bs, n);
            const auto batch = view.subspan(lo, hi - lo);
            const double bn = static_cast<double>(batch.size());

            KahanSum loss;
            std::fill(mean_grad.begin(), mean_grad.end(), 0.0);
            for (const PreferencePair& pair : batch) {
                const ScorePair s = score_pair(params, pair.features);
                loss.add(loss_forward(spec, s));
                accumulate_gradient(pair.features, loss_gradient(spec, s),
                                    mean_grad);
            }
            const double mean_loss = loss.value() / bn;
            for (double& g : mean_grad) g /= bn;
            check_batch_finite(mean_loss, mean_grad, epoch, b);
            sgd_step(params, mean_grad, opt, &velocity);

            MetricsRow row;
            row.epoch = epoch;
            row.batch = b;
            row.mean_loss = mean_loss;
            row.mean_w = 1.0;
            res.metrics.push_back(std::move(row));
            if (record_trace) res.theta_trace.push_back(params.theta());
        }
    }

    res.params = std::move(params);
    return res;
}

double preference_accuracy(const PolicyParams& params, const LossSpec& spec,
                           const Dataset& dataset) {
    if (dataset.empty()) throw std::invalid_argument("dataset is empty");
    KahanSum acc;
    for (const PreferencePair& pair : dataset) {
        const double p = pref_probability(spec, score_pair(params, pair.features));
        if (p > 0.5) {
            acc.add(1.0);
        } else if (p == 0.5) {
            acc.add(0.5);
        }
    }
    return acc.value() / static_cast<double>(dataset.size());
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& metrics,
                       const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open metrics file: " + path);
    }
    out.precision(17);
    if (!header_comment.empty()) {
        out << "# " << header_comment << "\n";
    }
    const std::size_t k = metrics.empty() ? 0 : metrics.front().eta.size();
    out << "epoch,batch,mean_loss,mean_w";
    for (std::size_t j = 1; j <= k; ++j) out << ",eta_" << j;
    out << "\n";
    for (const MetricsRow& row : metrics) {
        out << row.epoch << ',' << row.batch << ',' << row.mean_loss << ','
            << row.mean_w;
        for (double eta : row.eta) out << ',' << eta;
        out << "\n";
    }
}

}  // namespace lcpo
