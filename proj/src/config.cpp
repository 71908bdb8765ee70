#include "lcpo/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace lcpo {

namespace {

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: " + value);
    }
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              " has no '=': " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              " has an empty key");
        }
        cfg.kv_[key] = value;
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool KvConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

void KvConfig::set(const std::string& key, const std::string& value) {
    kv_[key] = value;
}

std::string KvConfig::get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int KvConfig::get_int(const std::string& key) const {
    const double x = get_double(key);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x) {
        throw ConfigError("config key '" + key + "' is not an integer");
    }
    return i;
}

int KvConfig::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KvConfig::get_u64(const std::string& key) const {
    const std::string value = get_string(key);
    try {
        std::size_t used = 0;
        const std::uint64_t x = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key +
                          "' is not an unsigned integer: " + value);
    }
}

std::uint64_t KvConfig::get_u64(const std::string& key,
                                std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string value = get_string(key);
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: " + value);
}

std::vector<double> KvConfig::get_double_list(const std::string& key) const {
    const std::string value = get_string(key);
    std::vector<double> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
    return out;
}

std::string KvConfig::canonical_text() const {
    std::ostringstream out;
    for (const auto& [key, value] : kv_) {
        out << key << " = " << value << "\n";
    }
    return out.str();
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex_u64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

RunConfig RunConfig::from_kv(const KvConfig& kv) {
    RunConfig cfg;
    cfg.name = kv.get_string("run.name", "run");
    cfg.seed = kv.get_u64("run.seed", 0);
    cfg.config_hash = hex_u64(fnv1a64(kv.canonical_text()));

    GeneratorSpec& gen = cfg.gen;
    gen.n_pairs = kv.get_int("data.n_pairs", 1000);
    gen.k_annotators = kv.get_int("data.k_annotators", 1);
    if (kv.has("data.eta_true")) {
        gen.eta_true = kv.get_double_list("data.eta_true");
    }
    if (kv.has("data.frequencies")) {
        gen.annotator_frequencies = kv.get_double_list("data.frequencies");
    }
    gen.feature_dim = kv.get_int("data.feature_dim", 8);
    const std::string law = kv.get_string("data.p_star_law", "beta");
    if (law == "beta") {
        gen.p_star_law = PStarLaw::BetaDistribution;
    } else if (law == "theta_star") {
        gen.p_star_law = PStarLaw::FromThetaStar;
        if (!kv.has("data.theta_star")) {
            throw ConfigError("missing config key 'data.theta_star' "
                              "(required when data.p_star_law = theta_star)");
        }
    } else {
        throw ConfigError("config key 'data.p_star_law' must be "
                          "'beta' or 'theta_star', got: " + law);
    }
    if (kv.has("data.theta_star")) {
        gen.theta_star = kv.get_double_list("data.theta_star");
    }
    gen.gen_beta = kv.get_double("data.gen_beta", 1.0);
    gen.beta_a = kv.get_double("data.beta_a", 2.0);
    gen.beta_b = kv.get_double("data.beta_b", 2.0);
    gen.len_lo = kv.get_int("data.len_lo", 8);
    gen.len_hi = kv.get_int("data.len_hi", 32);
    gen.seed = kv.get_u64("data.seed", cfg.seed);

    const std::string kind = kv.get_string("loss.kind", "dpo");
    if (kind == "dpo") {
        cfg.loss.kind = LossKind::DPO;
    } else if (kind == "ipo") {
        cfg.loss.kind = LossKind::IPO;
    } else if (kind == "simpo") {
        cfg.loss.kind = LossKind::SimPO;
    } else if (kind == "cpo") {
        cfg.loss.kind = LossKind::CPO;
    } else {
        throw ConfigError("config key 'loss.kind' must be one of "
                          "dpo|ipo|simpo|cpo, got: " + kind);
    }
    cfg.loss.beta = kv.get_double("loss.beta", 1.0);
    cfg.loss.gamma = kv.get_double("loss.gamma", 0.0);

    cfg.em.eta_init = kv.get_double("em.eta_init", 0.9);
    cfg.em.alpha = kv.get_double("em.alpha", 0.1);
    const std::string mode = kv.get_string("em.update_mode", "ema_per_batch");
    if (mode == "ema_per_batch") {
        cfg.em.update_mode = EtaUpdateMode::EmaPerBatch;
    } else if (mode == "closed_form_per_epoch") {
        cfg.em.update_mode = EtaUpdateMode::ClosedFormPerEpoch;
    } else {
        throw ConfigError("config key 'em.update_mode' must be "
                          "'ema_per_batch' or 'closed_form_per_epoch', got: " +
                          mode);
    }
    cfg.em.unit_weights = kv.get_bool("em.unit_weights", false);

    cfg.opt.learning_rate = kv.get_double("opt.learning_rate", 0.05);
    cfg.opt.epochs = kv.get_int("opt.epochs", 50);
    cfg.opt.batch_size = kv.get_int("opt.batch_size", 64);
    cfg.opt.momentum = kv.get_double("opt.momentum", 0.0);
    cfg.opt.seed = kv.get_u64("opt.seed", cfg.seed);

    try {
        cfg.loss.validate();
        cfg.em.validate();
        cfg.opt.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

}  // namespace lcpo
