#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "lcpo/em.hpp"
#include "lcpo/em_theory.hpp"
#include "lcpo/math_util.hpp"
#include "lcpo/synth_data.hpp"

using namespace lcpo;

namespace {

GeneratorSpec base_spec(std::int64_t n, double eta, std::uint64_t seed) {
    GeneratorSpec spec;
    spec.n_pairs = n;
    spec.k_annotators = 1;
    spec.eta_true = {eta};
    spec.seed = seed;
    return spec;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("generate is deterministic in the seed") {
    const GeneratorSpec spec = base_spec(200, 0.8, 99);
    CHECK(to_jsonl(generate(spec)) == to_jsonl(generate(spec)));
    GeneratorSpec other = spec;
    other.seed = 100;
    CHECK(to_jsonl(generate(other)) != to_jsonl(generate(spec)));
}

TEST_CASE("perfectly reliable annotator never flips") {
    const Dataset ds = generate(base_spec(2000, 1.0, 5));
    for (const PreferencePair& p : ds) {
        CHECK(*p.z_true == 1);
        CHECK_FALSE(*p.flipped);
        CHECK(*p.p_star_true >= 0.0);
    }
}

TEST_CASE("coin-flip annotator carries no aggregate information") {
    const Dataset ds = generate(base_spec(100000, 0.5, 6));
    // Per pair, correctness still correlates with the stored orientation
    // being the likelier side (correct labels land on the high-probability
    // direction more often); what vanishes at eta = 0.5 is every aggregate
    // signature of the label process. The stored orientation is the
    // likelier side exactly half the time, its ground-truth probability is
    // symmetric around 1/2, and the correctness rate is 1/2. Tolerances are
    // > 3 sigma at this sample size.
    double z_sum = 0.0;
    double likelier = 0.0;
    double p_sum = 0.0;
    for (const PreferencePair& p : ds) {
        z_sum += *p.z_true;
        likelier += *p.p_star_true > 0.5 ? 1.0 : 0.0;
        p_sum += *p.p_star_true;
    }
    const double total = static_cast<double>(ds.size());
    CHECK(std::fabs(z_sum / total - 0.5) < 0.005);
    CHECK(std::fabs(likelier / total - 0.5) < 0.005);
    CHECK(std::fabs(p_sum / total - 0.5) < 0.005);
}

TEST_CASE("label correctness rate matches the configured reliability") {
    const Dataset ds = generate(base_spec(100000, 0.7, 7));
    double correct = 0.0;
    for (const PreferencePair& p : ds) correct += *p.z_true;
    CHECK(std::fabs(correct / ds.size() - 0.7) < 0.005);
}

TEST_CASE("split_by_annotator partitions and preserves order") {
    SUBCASE("single annotator yields the input back") {
        const Dataset ds = generate(base_spec(50, 0.9, 8));
        const auto groups = split_by_annotator(ds);
        CHECK(groups.size() == 1);
        CHECK(groups.at(0).size() == 50);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(groups.at(0)[i].id == ds[i].id);
        }
    }
    SUBCASE("two balanced annotators split near the middle") {
        GeneratorSpec spec = base_spec(10000, 0.9, 9);
        spec.k_annotators = 2;
        spec.eta_true = {0.9, 0.8};
        spec.annotator_frequencies = {0.5, 0.5};
        const auto groups = split_by_annotator(generate(spec));
        CHECK(groups.size() == 2);
        CHECK(std::fabs(static_cast<double>(groups.at(0).size()) - 5000.0) <= 150.0);
        CHECK(groups.at(0).size() + groups.at(1).size() == 10000);
    }
    SUBCASE("empty dataset yields an empty map") {
        CHECK(split_by_annotator(Dataset{}).empty());
    }
}

TEST_CASE("inject_noise") {
    const Dataset ds = generate(base_spec(1000, 0.9, 10));
    SUBCASE("zero fraction is the identity") {
        CHECK(to_jsonl(inject_noise(ds, 0.0, 77)) == to_jsonl(ds));
    }
    SUBCASE("full fraction flips everything; flipping twice restores") {
        const Dataset once = inject_noise(ds, 1.0, 77);
        const Dataset twice = inject_noise(once, 1.0, 78);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(once[i].features.phi_w == ds[i].features.phi_l);
            CHECK(*once[i].z_true == 1 - *ds[i].z_true);
            CHECK(twice[i].features.phi_w == ds[i].features.phi_w);
            CHECK(twice[i].features.len_w == ds[i].features.len_w);
            CHECK(*twice[i].z_true == *ds[i].z_true);
            CHECK(*twice[i].flipped == *ds[i].flipped);
            // p -> 1-p -> 1-(1-p) round trips to within one rounding step.
            CHECK(*twice[i].p_star_true ==
                  doctest::Approx(*ds[i].p_star_true).epsilon(1e-14));
        }
    }
    SUBCASE("sequential injections compose like independent flips") {
        const Dataset big = generate(base_spec(100000, 0.9, 11));
        const double f1 = 0.2, f2 = 0.3;
        const Dataset twice = inject_noise(inject_noise(big, f1, 101), f2, 102);
        double flipped = 0.0;
        for (std::size_t i = 0; i < big.size(); ++i) {
            if (*twice[i].z_true != *big[i].z_true) flipped += 1.0;
        }
        const double f_eff = f1 * (1.0 - f2) + f2 * (1.0 - f1);  // 0.38
        const double bound = 3.0 * std::sqrt(f_eff * (1.0 - f_eff) / big.size());
        CHECK(std::fabs(flipped / big.size() - f_eff) <= bound);
    }
    SUBCASE("effective reliability arithmetic") {
        CHECK(effective_reliability(1.0, 0.2) == doctest::Approx(0.8));
        CHECK(effective_reliability(0.9, 0.0) == doctest::Approx(0.9));
        CHECK(effective_reliability(0.5, 0.37) == doctest::Approx(0.5));
    }
    SUBCASE("full-batch EM recovers the effective reliability of a noised copy") {
        const Dataset clean = generate(base_spec(10000, 1.0, 12));
        const Dataset noised = inject_noise(clean, 0.2, 103);
        const CalibratedBatch batch(true_p_star(noised));
        const auto res = iterate_to_fixed_point(batch, 0.9);
        CHECK(res.converged);
        CHECK(std::fabs(res.eta_hat - 0.8) <= 0.02);
    }
}

TEST_CASE("calibration realizability: noiseless fit recovers the generating direction") {
    GeneratorSpec spec = base_spec(100000, 1.0, 13);
    spec.feature_dim = 8;
    spec.p_star_law = PStarLaw::FromThetaStar;
    spec.theta_star = {0.8, -0.4, 0.2, 0.6, -0.7, 0.3, -0.2, 0.5};
    const Dataset ds = generate(spec);

    LossSpec loss;
    OptimizerConfig opt;
    opt.learning_rate = 0.3;
    opt.epochs = 4;
    opt.batch_size = 1024;
    opt.seed = 3;
    const TrainResult res = run_plain(ds, PolicyParams::zeros(8), loss, opt);
    CHECK(cosine(res.params.theta(), spec.theta_star) >= 0.99);
}

TEST_CASE("dataset JSONL round trip") {
    GeneratorSpec spec = base_spec(30, 0.8, 14);
    spec.k_annotators = 2;
    spec.eta_true = {0.8, 0.7};
    const Dataset ds = generate(spec);
    const Dataset back = parse_jsonl(to_jsonl(ds));
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back[i].id == ds[i].id);
        CHECK(back[i].annotator_id == ds[i].annotator_id);
        CHECK(back[i].features.phi_w == ds[i].features.phi_w);
        CHECK(back[i].features.phi_l == ds[i].features.phi_l);
        CHECK(back[i].features.len_w == ds[i].features.len_w);
        CHECK(back[i].features.len_l == ds[i].features.len_l);
        CHECK(*back[i].p_star_true == doctest::Approx(*ds[i].p_star_true));
        CHECK(*back[i].z_true == *ds[i].z_true);
        CHECK(*back[i].flipped == *ds[i].flipped);
    }
}

TEST_CASE("dataset JSONL emits keys in the documented order") {
    const Dataset ds = generate(base_spec(1, 0.8, 15));
    const std::string line = to_jsonl(ds);
    const char* keys[] = {"\"id\"",    "\"annotator_id\"", "\"phi_w\"",
                          "\"phi_l\"", "\"len_w\"",        "\"len_l\"",
                          "\"debug\""};
    std::size_t pos = 0;
    for (const char* key : keys) {
        const std::size_t found = line.find(key, pos);
        REQUIRE(found != std::string::npos);
        pos = found;
    }
}

TEST_CASE("dataset reader ignores unknown keys and reports bad lines") {
    SUBCASE("unknown keys are ignored") {
        const std::string text =
            R"({"id": 3, "annotator_id": 1, "phi_w": [1.0], "phi_l": [2.0], )"
            R"("len_w": 5, "len_l": 6, "extra": "ignored", "another": 42})"
            "\n";
        const Dataset ds = parse_jsonl(text);
        REQUIRE(ds.size() == 1);
        CHECK(ds[0].id == 3);
        CHECK(ds[0].annotator_id == 1);
        CHECK(ds[0].features.len_l == 6);
        CHECK_FALSE(ds[0].p_star_true.has_value());
    }
    SUBCASE("parse errors name the line") {
        const std::string text =
            R"({"id": 0, "annotator_id": 0, "phi_w": [1.0], "phi_l": [1.0], )"
            R"("len_w": 1, "len_l": 1})"
            "\nnot json\n";
        CHECK_THROWS_WITH_AS(parse_jsonl(text), doctest::Contains("line 2"),
                             std::runtime_error);
    }
}

TEST_CASE("file round trip") {
    namespace fs = std::filesystem;
    const Dataset ds = generate(base_spec(12, 0.9, 16));
    const std::string path =
        (fs::temp_directory_path() / "lcpo_synth_roundtrip.jsonl").string();
    write_jsonl(path, ds);
    const Dataset back = read_jsonl(path);
    CHECK(to_jsonl(back) == to_jsonl(ds));
    std::remove(path.c_str());
}

TEST_CASE("generator spec validation names the broken field") {
    GeneratorSpec spec = base_spec(10, 0.9, 17);
    spec.eta_true = {};
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("eta_true"),
                         std::invalid_argument);
    spec = base_spec(10, 0.9, 17);
    spec.annotator_frequencies = {0.5, 0.6};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = base_spec(10, 0.9, 17);
    spec.p_star_law = PStarLaw::FromThetaStar;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("theta_star"),
                         std::invalid_argument);
}
