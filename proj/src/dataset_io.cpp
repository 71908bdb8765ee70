#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lcpo/synth_data.hpp"

namespace lcpo {

namespace {

// Key order is part of the file contract; ordered_json preserves insertion
// order on write.
nlohmann::ordered_json pair_to_json(const PreferencePair& p) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["annotator_id"] = p.annotator_id;
    j["phi_w"] = p.features.phi_w;
    j["phi_l"] = p.features.phi_l;
    j["len_w"] = p.features.len_w;
    j["len_l"] = p.features.len_l;
    if (p.p_star_true || p.z_true || p.flipped) {
        nlohmann::ordered_json debug;
        if (p.p_star_true) debug["p_star"] = *p.p_star_true;
        if (p.z_true) debug["z"] = *p.z_true;
        if (p.flipped) debug["flipped"] = *p.flipped;
        j["debug"] = std::move(debug);
    }
    return j;
}

PreferencePair pair_from_json(const nlohmann::json& j) {
    PreferencePair p;
    p.id = j.at("id").get<std::int64_t>();
    p.annotator_id = j.at("annotator_id").get<int>();
    p.features.phi_w = j.at("phi_w").get<std::vector<double>>();
    p.features.phi_l = j.at("phi_l").get<std::vector<double>>();
    p.features.len_w = j.at("len_w").get<int>();
    p.features.len_l = j.at("len_l").get<int>();
    if (j.contains("debug")) {
        const auto& debug = j.at("debug");
        if (debug.contains("p_star")) p.p_star_true = debug.at("p_star").get<double>();
        if (debug.contains("z")) p.z_true = debug.at("z").get<int>();
        if (debug.contains("flipped")) p.flipped = debug.at("flipped").get<bool>();
    }
    return p;
}

}  // namespace

std::string to_jsonl(const Dataset& dataset) {
    std::ostringstream out;
    for (const PreferencePair& p : dataset) {
        out << pair_to_json(p).dump() << '\n';
    }
    return out.str();
}

void write_jsonl(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << to_jsonl(dataset);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset parse_jsonl(const std::string& text) {
    Dataset out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(pair_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("bad dataset line " + std::to_string(lineno) +
                                     ": " + e.what());
        }
    }
    return out;
}

Dataset read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_jsonl(buf.str());
}

}  // namespace lcpo
