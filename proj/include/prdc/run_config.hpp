#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prdc/agent.hpp"

namespace prdc {

/// Everything a training run needs, flat. Every field is echoed to the run
/// manifest, and a manifest alone re-creates the identical run.
struct RunConfig {
    std::string env = "lineworld";
    std::string data;                 // dataset file; empty -> generate from `variant`
    std::string variant;              // lineworld variant name when generating
    int gen_samples_per_state = 100;
    uint64_t gen_seed = 0;
    std::string algorithm = "prdc";   // prdc | td3bc | td3 | bc | prdc_knn
    long steps = 10000;
    uint64_t seed = 0;
    long eval_interval = 500;   // 0 disables periodic evaluation
    int eval_episodes = 10;
    long probe_interval = 500;  // 0 disables value probes
    int probe_states = 10;
    std::string out;

    double gamma = 0.99;
    double tau = 0.005;
    double policy_noise = 0.2;
    double noise_clip = 0.5;
    int policy_update_frequency = 2;
    int batch_size = 256;
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    double action_bound = 1.0;
    int width = 256;

    double alpha = 2.5;
    double beta = 2.0;
    int k = 1;
};

namespace detail {

inline long parse_long_field(const std::string& name, const std::string& v) {
    try {
        size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for field '" + name + "': " + v);
    }
}

inline uint64_t parse_u64_field(const std::string& name, const std::string& v) {
    try {
        size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid unsigned integer for field '" + name + "': " + v);
    }
}

inline double parse_double_field(const std::string& name, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for field '" + name + "': " + v);
    }
}

struct ConfigField {
    const char* name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<ConfigField>& config_fields() {
    auto str_field = [](const char* n, std::string RunConfig::* p) {
        return ConfigField{n, [p](const RunConfig& c) { return c.*p; },
                           [p](RunConfig& c, const std::string& v) { c.*p = v; }};
    };
    auto long_field = [](const char* n, long RunConfig::* p) {
        return ConfigField{n, [p](const RunConfig& c) { return std::to_string(c.*p); },
                           [n, p](RunConfig& c, const std::string& v) {
                               c.*p = parse_long_field(n, v);
                           }};
    };
    auto int_field = [](const char* n, int RunConfig::* p) {
        return ConfigField{n, [p](const RunConfig& c) { return std::to_string(c.*p); },
                           [n, p](RunConfig& c, const std::string& v) {
                               c.*p = static_cast<int>(parse_long_field(n, v));
                           }};
    };
    auto u64_field = [](const char* n, uint64_t RunConfig::* p) {
        return ConfigField{n, [p](const RunConfig& c) { return std::to_string(c.*p); },
                           [n, p](RunConfig& c, const std::string& v) {
                               c.*p = parse_u64_field(n, v);
                           }};
    };
    auto dbl_field = [](const char* n, double RunConfig::* p) {
        return ConfigField{n, [p](const RunConfig& c) { return format_double(c.*p); },
                           [n, p](RunConfig& c, const std::string& v) {
                               c.*p = parse_double_field(n, v);
                           }};
    };
    static const std::vector<ConfigField> fields = {
        str_field("env", &RunConfig::env),
        str_field("data", &RunConfig::data),
        str_field("variant", &RunConfig::variant),
        int_field("gen_samples_per_state", &RunConfig::gen_samples_per_state),
        u64_field("gen_seed", &RunConfig::gen_seed),
        str_field("algorithm", &RunConfig::algorithm),
        long_field("steps", &RunConfig::steps),
        u64_field("seed", &RunConfig::seed),
        long_field("eval_interval", &RunConfig::eval_interval),
        int_field("eval_episodes", &RunConfig::eval_episodes),
        long_field("probe_interval", &RunConfig::probe_interval),
        int_field("probe_states", &RunConfig::probe_states),
        str_field("out", &RunConfig::out),
        dbl_field("gamma", &RunConfig::gamma),
        dbl_field("tau", &RunConfig::tau),
        dbl_field("policy_noise", &RunConfig::policy_noise),
        dbl_field("noise_clip", &RunConfig::noise_clip),
        int_field("policy_update_frequency", &RunConfig::policy_update_frequency),
        int_field("batch_size", &RunConfig::batch_size),
        dbl_field("actor_lr", &RunConfig::actor_lr),
        dbl_field("critic_lr", &RunConfig::critic_lr),
        dbl_field("action_bound", &RunConfig::action_bound),
        int_field("width", &RunConfig::width),
        dbl_field("alpha", &RunConfig::alpha),
        dbl_field("beta", &RunConfig::beta),
        int_field("k", &RunConfig::k),
    };
    return fields;
}

}  // namespace detail

/// All fields as strings, in declaration order. This is what the manifest
/// records; nothing stays a silent default.
inline std::vector<std::pair<std::string, std::string>> config_to_pairs(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : detail::config_fields()) out.emplace_back(f.name, f.get(cfg));
    return out;
}

inline void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : detail::config_fields()) {
        if (key == f.name) {
            f.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config field '" + key + "'");
}

/// Flat `key = value` file. Blank lines and '#' comments are skipped.
inline std::map<std::string, std::string> load_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

/// Manifest file: a flat JSON object of string values.
inline std::map<std::string, std::string> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path + ": manifest must be a JSON object");
    std::map<std::string, std::string> kv;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string()) {
            kv[key] = value.get<std::string>();
        } else {
            kv[key] = value.dump();
        }
    }
    return kv;
}

/// Loads either format: JSON manifests start with '{'.
inline std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) throw ConfigError("cannot open config file: " + path);
    char first = 0;
    probe >> first;
    probe.close();
    return first == '{' ? load_manifest(path) : load_flat_config(path);
}

inline void apply_config_map(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) apply_config_value(cfg, key, value);
}

inline std::string manifest_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    for (const auto& [key, value] : config_to_pairs(cfg)) j[key] = value;
    return j.dump(2) + "\n";
}

/// Normalizes and validates a config in place: applies the PRDC_SEED
/// override, pins alpha = 0 for the pure cloning baseline, and rejects
/// inconsistent field combinations by name.
inline void resolve_config(RunConfig& cfg) {
    if (const char* env_seed = std::getenv("PRDC_SEED")) {
        cfg.seed = detail::parse_u64_field("PRDC_SEED", env_seed);
    }
    if (cfg.env != "lineworld") {
        throw ConfigError("field 'env': only 'lineworld' is supported, got '" + cfg.env + "'");
    }
    if (cfg.data.empty() && cfg.variant.empty()) {
        throw ConfigError("field 'data'/'variant': provide a dataset file or a variant");
    }
    if (!cfg.variant.empty()) parse_variant(cfg.variant);
    if (cfg.algorithm == "bc") cfg.alpha = 0.0;  // cloning-only: the Q term drops out
    if (cfg.steps < 0) throw ConfigError("field 'steps': must be >= 0");
    if (cfg.eval_interval < 0) throw ConfigError("field 'eval_interval': must be >= 0");
    if (cfg.eval_episodes < 1) throw ConfigError("field 'eval_episodes': must be >= 1");
    if (cfg.probe_interval < 0) throw ConfigError("field 'probe_interval': must be >= 0");
    if (cfg.probe_states < 1) throw ConfigError("field 'probe_states': must be >= 1");
}

/// Maps the algorithm name onto the shared actor-critic loop's knobs.
inline PrdcConfig algorithm_config(const RunConfig& cfg) {
    PrdcConfig pc;
    pc.td3.gamma = cfg.gamma;
    pc.td3.tau = cfg.tau;
    pc.td3.policy_noise = cfg.policy_noise;
    pc.td3.noise_clip = cfg.noise_clip;
    pc.td3.policy_update_frequency = cfg.policy_update_frequency;
    pc.td3.batch_size = cfg.batch_size;
    pc.td3.actor_lr = cfg.actor_lr;
    pc.td3.critic_lr = cfg.critic_lr;
    pc.td3.action_bound = cfg.action_bound;
    pc.td3.hidden_width = cfg.width;
    pc.alpha = cfg.alpha;
    pc.beta = cfg.beta;
    pc.k = cfg.k;
    if (cfg.algorithm == "prdc") {
        pc.regularizer = Regularizer::prdc_nearest;
    } else if (cfg.algorithm == "prdc_knn") {
        pc.regularizer = Regularizer::knn_average;
    } else if (cfg.algorithm == "td3bc" || cfg.algorithm == "bc") {
        pc.regularizer = Regularizer::bc;
    } else if (cfg.algorithm == "td3") {
        pc.regularizer = Regularizer::none;
    } else {
        throw ConfigError("field 'algorithm': unknown algorithm '" + cfg.algorithm + "'");
    }
    pc.validate();
    return pc;
}

}  // namespace prdc
