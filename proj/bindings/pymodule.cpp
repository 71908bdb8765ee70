#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lcpo/em.hpp"
#include "lcpo/em_theory.hpp"
#include "lcpo/losses.hpp"
#include "lcpo/oracle.hpp"
#include "lcpo/score_model.hpp"
#include "lcpo/synth_data.hpp"

namespace py = pybind11;
using namespace lcpo;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pairwise preference losses with EM-estimated annotator "
              "reliabilities, plus the synthetic data and oracle tooling "
              "used to verify them.";

    // -- losses --

    py::enum_<LossKind>(m, "LossKind")
        .value("DPO", LossKind::DPO)
        .value("IPO", LossKind::IPO)
        .value("SimPO", LossKind::SimPO)
        .value("CPO", LossKind::CPO);

    py::class_<LossSpec>(m, "LossSpec")
        .def(py::init<>())
        .def_readwrite("kind", &LossSpec::kind)
        .def_readwrite("beta", &LossSpec::beta)
        .def_readwrite("gamma", &LossSpec::gamma)
        .def("validate", &LossSpec::validate);

    py::class_<ScorePair>(m, "ScorePair")
        .def(py::init<>())
        .def_readwrite("logp_w", &ScorePair::logp_w)
        .def_readwrite("logp_l", &ScorePair::logp_l)
        .def_readwrite("ref_logp_w", &ScorePair::ref_logp_w)
        .def_readwrite("ref_logp_l", &ScorePair::ref_logp_l)
        .def_readwrite("len_w", &ScorePair::len_w)
        .def_readwrite("len_l", &ScorePair::len_l)
        .def("swapped", &ScorePair::swapped);

    m.def("loss_forward", &loss_forward, py::arg("spec"), py::arg("scores"));
    m.def("loss_reverse", &loss_reverse, py::arg("spec"), py::arg("scores"));
    m.def("pref_logit", &pref_logit, py::arg("spec"), py::arg("scores"));
    m.def("pref_probability", &pref_probability, py::arg("spec"), py::arg("scores"),
          "Model probability of the stored orientation under the loss's "
          "implied pairwise distribution.");
    m.def("bt_consistency", &bt_consistency, py::arg("spec"), py::arg("scores"),
          "Gap between the implied probability and the direct Bradley-Terry "
          "form; logistic loss only.");

    // -- synthetic data --

    py::class_<Features>(m, "Features")
        .def(py::init<>())
        .def_readwrite("phi_w", &Features::phi_w)
        .def_readwrite("phi_l", &Features::phi_l)
        .def_readwrite("len_w", &Features::len_w)
        .def_readwrite("len_l", &Features::len_l);

    py::class_<PreferencePair>(m, "PreferencePair")
        .def(py::init<>())
        .def_readwrite("id", &PreferencePair::id)
        .def_readwrite("annotator_id", &PreferencePair::annotator_id)
        .def_readwrite("features", &PreferencePair::features)
        .def_readwrite("p_star_true", &PreferencePair::p_star_true)
        .def_readwrite("z_true", &PreferencePair::z_true)
        .def_readwrite("flipped", &PreferencePair::flipped);

    py::enum_<PStarLaw>(m, "PStarLaw")
        .value("FromThetaStar", PStarLaw::FromThetaStar)
        .value("BetaDistribution", PStarLaw::BetaDistribution);

    py::class_<GeneratorSpec>(m, "GeneratorSpec")
        .def(py::init<>())
        .def_readwrite("n_pairs", &GeneratorSpec::n_pairs)
        .def_readwrite("k_annotators", &GeneratorSpec::k_annotators)
        .def_readwrite("eta_true", &GeneratorSpec::eta_true)
        .def_readwrite("annotator_frequencies", &GeneratorSpec::annotator_frequencies)
        .def_readwrite("feature_dim", &GeneratorSpec::feature_dim)
        .def_readwrite("p_star_law", &GeneratorSpec::p_star_law)
        .def_readwrite("theta_star", &GeneratorSpec::theta_star)
        .def_readwrite("gen_beta", &GeneratorSpec::gen_beta)
        .def_readwrite("beta_a", &GeneratorSpec::beta_a)
        .def_readwrite("beta_b", &GeneratorSpec::beta_b)
        .def_readwrite("len_lo", &GeneratorSpec::len_lo)
        .def_readwrite("len_hi", &GeneratorSpec::len_hi)
        .def_readwrite("seed", &GeneratorSpec::seed)
        .def("validate", &GeneratorSpec::validate);

    m.def("generate", &generate, py::arg("spec"));
    m.def("inject_noise", &inject_noise, py::arg("dataset"), py::arg("flip_fraction"),
          py::arg("seed"));
    m.def("effective_reliability", &effective_reliability, py::arg("eta"),
          py::arg("flip_fraction"));
    m.def("true_p_star", &true_p_star, py::arg("dataset"), py::arg("annotator_id") = -1);

    // -- policy and training --

    py::class_<PolicyParams>(m, "PolicyParams")
        .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("theta"),
             py::arg("theta_ref"))
        .def_static("zeros", &PolicyParams::zeros, py::arg("dim"))
        .def_property_readonly("theta",
                               [](const PolicyParams& p) { return p.theta(); })
        .def_property_readonly("theta_ref",
                               [](const PolicyParams& p) { return p.theta_ref(); });

    py::class_<OptimizerConfig>(m, "OptimizerConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &OptimizerConfig::learning_rate)
        .def_readwrite("epochs", &OptimizerConfig::epochs)
        .def_readwrite("batch_size", &OptimizerConfig::batch_size)
        .def_readwrite("seed", &OptimizerConfig::seed)
        .def_readwrite("momentum", &OptimizerConfig::momentum)
        .def("validate", &OptimizerConfig::validate);

    py::enum_<EtaUpdateMode>(m, "EtaUpdateMode")
        .value("EmaPerBatch", EtaUpdateMode::EmaPerBatch)
        .value("ClosedFormPerEpoch", EtaUpdateMode::ClosedFormPerEpoch);

    py::class_<EmConfig>(m, "EmConfig")
        .def(py::init<>())
        .def_readwrite("eta_init", &EmConfig::eta_init)
        .def_readwrite("alpha", &EmConfig::alpha)
        .def_readwrite("update_mode", &EmConfig::update_mode)
        .def_readwrite("unit_weights", &EmConfig::unit_weights)
        .def_readwrite("record_trace", &EmConfig::record_trace)
        .def("validate", &EmConfig::validate);

    py::class_<AnnotatorTable>(m, "AnnotatorTable")
        .def_static("init", &AnnotatorTable::init, py::arg("k_annotators"),
                    py::arg("eta_init"))
        .def_readonly("eta", &AnnotatorTable::eta)
        .def_readonly("counts", &AnnotatorTable::counts)
        .def("eta_at", &AnnotatorTable::eta_at, py::arg("k"));

    py::class_<MetricsRow>(m, "MetricsRow")
        .def_readonly("epoch", &MetricsRow::epoch)
        .def_readonly("batch", &MetricsRow::batch)
        .def_readonly("mean_loss", &MetricsRow::mean_loss)
        .def_readonly("mean_w", &MetricsRow::mean_w)
        .def_readonly("eta", &MetricsRow::eta);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("params", &TrainResult::params)
        .def_readonly("table", &TrainResult::table)
        .def_readonly("metrics", &TrainResult::metrics)
        .def_readonly("theta_trace", &TrainResult::theta_trace);

    m.def("e_step_weight", &e_step_weight, py::arg("p_star"), py::arg("eta_k"),
          "Posterior probability that an annotated label is correct.");
    m.def("run_lcpo", &run_lcpo, py::arg("dataset"), py::arg("params"),
          py::arg("spec"), py::arg("em"), py::arg("opt"),
          "Confidence-weighted training with per-batch reliability updates.");
    m.def("run_plain", &run_plain, py::arg("dataset"), py::arg("params"),
          py::arg("spec"), py::arg("opt"), py::arg("record_trace") = false);
    m.def("preference_accuracy", &preference_accuracy, py::arg("params"),
          py::arg("spec"), py::arg("dataset"));

    // -- full-batch theory --

    py::class_<CalibratedBatch>(m, "CalibratedBatch")
        .def(py::init<std::vector<double>>(), py::arg("p_star"))
        .def_readonly("p_star", &CalibratedBatch::p_star)
        .def("degenerate", &CalibratedBatch::degenerate);

    py::class_<FixedPointResult>(m, "FixedPointResult")
        .def_readonly("eta_hat", &FixedPointResult::eta_hat)
        .def_readonly("iterations", &FixedPointResult::iterations)
        .def_readonly("converged", &FixedPointResult::converged)
        .def_readonly("degenerate", &FixedPointResult::degenerate)
        .def_readonly("trajectory", &FixedPointResult::trajectory);

    m.def("operator_T", &operator_T, py::arg("batch"), py::arg("eta"),
          "Full-batch EM averaging operator on the reliability.");
    m.def("iterate_to_fixed_point", &iterate_to_fixed_point, py::arg("batch"),
          py::arg("eta0"), py::arg("tol") = 1e-10, py::arg("max_iters") = 100000);
    m.def("loglik_eta", &loglik_eta, py::arg("batch"), py::arg("eta"));
    m.def("loglik_deriv", &loglik_deriv, py::arg("batch"), py::arg("eta"));
    m.def("loglik_increment", &loglik_increment, py::arg("batch"),
          py::arg("eta_from"), py::arg("eta_to"));
    m.def("derivative_identity_residual", &derivative_identity_residual,
          py::arg("batch"), py::arg("eta"));

    // -- independent oracle --

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_readwrite("lo", &GridSpec::lo)
        .def_readwrite("hi", &GridSpec::hi)
        .def_readwrite("n_points", &GridSpec::n_points);

    py::class_<GridMleResult>(m, "GridMleResult")
        .def_readonly("eta_hat", &GridMleResult::eta_hat)
        .def_readonly("degenerate", &GridMleResult::degenerate);

    m.def("marginal_loglik", &marginal_loglik, py::arg("p_star"), py::arg("eta"));
    m.def(
        "grid_mle_eta",
        [](const std::vector<double>& p, const GridSpec& grid) {
            return grid_mle_eta(p, grid);
        },
        py::arg("p_star"), py::arg("grid") = GridSpec{},
        "Reliability MLE found by grid search plus golden-section refinement; "
        "independent of the EM path.");
}
