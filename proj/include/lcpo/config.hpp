#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lcpo/em.hpp"
#include "lcpo/losses.hpp"
#include "lcpo/score_model.hpp"
#include "lcpo/synth_data.hpp"

namespace lcpo {

/// Invalid or missing configuration; the message names the offending key.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key=value configuration: one "section.key = value" entry per line,
/// '#' starts a comment, blank lines ignored. Later entries override
/// earlier ones.
class KvConfig {
  public:
    static KvConfig parse(const std::string& text);
    static KvConfig parse_file(const std::string& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

    /// Sorted "key = value" lines; the canonical form that gets hashed.
    std::string canonical_text() const;

  private:
    std::map<std::string, std::string> kv_;
};

/// FNV-1a, the hash embedded in every output file for provenance.
std::uint64_t fnv1a64(std::string_view text);
std::string hex_u64(std::uint64_t value);

/// All sub-configs of one run, decoded from a KvConfig. run.seed is the
/// master seed; data.seed and opt.seed default to it.
struct RunConfig {
    std::string name;
    std::uint64_t seed = 0;
    GeneratorSpec gen;
    LossSpec loss;
    EmConfig em;
    OptimizerConfig opt;
    std::string config_hash;

    static RunConfig from_kv(const KvConfig& kv);
};

}  // namespace lcpo
