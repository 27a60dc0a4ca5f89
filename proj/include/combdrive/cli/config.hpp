// Run configuration for the command-line tool: defaults, a JSON config
// file and command-line flags, merged in that order of increasing priority.
#pragma once

#include "combdrive/continuation.hpp"
#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/model.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace combdrive::cli {

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char *kConfigEnv = "COMBDRIVE_CONFIG";

struct Config {
    double beta = 0.25;
    double v0 = 0.5;
    double tv = two_pi<double>();
    int m = 2;
    int p = 1;
    std::optional<int> n;              ///< selects the (2n, 1) orbit when set
    std::string symmetry = "odd";      ///< odd, even or both
    std::vector<double> delta_grid = default_delta_grid();
    std::string format = "csv";        ///< csv or jsonl
    std::string out;                   ///< output path, empty for stdout
    int workers = 1;

    ModelParams<double> params() const { return ModelParams<double>(beta, v0, tv); }

    /// Throws InvalidParameters on any out-of-range field.
    void validate() const {
        (void)params();
        if (m < 1 || p < 1) throw InvalidParameters("m and p must be >= 1");
        if (n && *n < 1) throw InvalidParameters("n must be >= 1");
        if (symmetry != "odd" && symmetry != "even" && symmetry != "both") {
            throw InvalidParameters("symmetry must be odd, even or both, got '" + symmetry + "'");
        }
        if (format != "csv" && format != "jsonl") {
            throw InvalidParameters("format must be csv or jsonl, got '" + format + "'");
        }
        if (workers < 1) throw InvalidParameters("workers must be >= 1");
        if (delta_grid.empty()) throw InvalidParameters("delta grid is empty");
    }

    /// (m, p) after applying n.
    std::pair<int, int> pair() const { return n ? std::pair{2 * *n, 1} : std::pair{m, p}; }

    std::vector<Symmetry> symmetries() const {
        if (symmetry == "both") return {Symmetry::Odd, Symmetry::Even};
        return {parse_symmetry(symmetry)};
    }
};

inline nlohmann::json to_json(const Config &c) {
    nlohmann::json j{{"beta", c.beta},         {"v0", c.v0},
                     {"tv", c.tv},             {"m", c.m},
                     {"p", c.p},               {"symmetry", c.symmetry},
                     {"delta_grid", c.delta_grid}, {"format", c.format},
                     {"out", c.out},           {"workers", c.workers}};
    j["n"] = c.n ? nlohmann::json(*c.n) : nlohmann::json(nullptr);
    return j;
}

/// Overlays the keys present in `j` on `base`. Unknown keys and wrong types
/// are rejected.
inline Config merge_json(Config base, const nlohmann::json &j) {
    if (!j.is_object()) throw InvalidParameters("config must be a JSON object");
    try {
        for (const auto &[key, v] : j.items()) {
            if (key == "beta") base.beta = v.get<double>();
            else if (key == "v0") base.v0 = v.get<double>();
            else if (key == "tv") base.tv = v.get<double>();
            else if (key == "m") base.m = v.get<int>();
            else if (key == "p") base.p = v.get<int>();
            else if (key == "n") base.n = v.is_null() ? std::nullopt : std::optional<int>(v.get<int>());
            else if (key == "symmetry") base.symmetry = v.get<std::string>();
            else if (key == "delta_grid") base.delta_grid = v.get<std::vector<double>>();
            else if (key == "format") base.format = v.get<std::string>();
            else if (key == "out") base.out = v.get<std::string>();
            else if (key == "workers") base.workers = v.get<int>();
            else throw InvalidParameters("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception &e) {
        throw InvalidParameters(std::string("config: ") + e.what());
    }
    return base;
}

inline Config from_json(const nlohmann::json &j) { return merge_json(Config{}, j); }

inline Config load_config(const std::string &path, const Config &base = {}) {
    std::ifstream in(path);
    if (!in) throw InvalidParameters("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw InvalidParameters("config file '" + path + "': " + e.what());
    }
    return merge_json(base, j);
}

/// Config file path from the explicit flag, else from the environment.
inline std::optional<std::string> config_path(const std::optional<std::string> &flag) {
    if (flag) return flag;
    if (const char *env = std::getenv(kConfigEnv); env && *env) return std::string(env);
    return std::nullopt;
}

/// Parses "a,b,c" into doubles.
inline std::vector<double> parse_grid(const std::string &text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception &) {
            throw InvalidParameters("bad delta grid entry '" + item + "'");
        }
    }
    if (out.empty()) throw InvalidParameters("delta grid is empty");
    return out;
}

} // namespace combdrive::cli
