#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

#include "wbe/core/types.hpp"

namespace wbe::cfg {

using nlohmann::json;

// Every reader below rejects malformed input with config_error so the CLI can
// map schema problems to a distinct exit code before any side effect happens.

inline void expect_object(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw config_error(ctx + ": expected a JSON object");
}

inline void allow_keys(const json& j, const std::string& ctx,
                       std::initializer_list<const char*> keys) {
    expect_object(j, ctx);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) { known = true; break; }
        if (!known) throw config_error(ctx + ": unknown key \"" + it.key() + "\"");
    }
}

inline const json& require(const json& j, const std::string& ctx, const std::string& key) {
    expect_object(j, ctx);
    auto it = j.find(key);
    if (it == j.end()) throw config_error(ctx + ": missing required key \"" + key + "\"");
    return *it;
}

inline double get_num(const json& j, const std::string& ctx, const std::string& key) {
    const json& v = require(j, ctx, key);
    if (!v.is_number()) throw config_error(ctx + "." + key + ": expected a number");
    return v.get<double>();
}

inline double get_num(const json& j, const std::string& ctx, const std::string& key, double def) {
    if (!j.is_object() || !j.contains(key)) return def;
    return get_num(j, ctx, key);
}

inline int get_int(const json& j, const std::string& ctx, const std::string& key) {
    const json& v = require(j, ctx, key);
    if (!v.is_number_integer()) throw config_error(ctx + "." + key + ": expected an integer");
    return v.get<int>();
}

inline int get_int(const json& j, const std::string& ctx, const std::string& key, int def) {
    if (!j.is_object() || !j.contains(key)) return def;
    return get_int(j, ctx, key);
}

inline std::uint64_t get_u64(const json& j, const std::string& ctx, const std::string& key,
                             std::uint64_t def) {
    if (!j.is_object() || !j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<double>() < 0)
        throw config_error(ctx + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline bool get_bool(const json& j, const std::string& ctx, const std::string& key, bool def) {
    if (!j.is_object() || !j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw config_error(ctx + "." + key + ": expected a boolean");
    return v.get<bool>();
}

inline std::string get_str(const json& j, const std::string& ctx, const std::string& key) {
    const json& v = require(j, ctx, key);
    if (!v.is_string()) throw config_error(ctx + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline std::string get_str(const json& j, const std::string& ctx, const std::string& key,
                           const std::string& def) {
    if (!j.is_object() || !j.contains(key)) return def;
    return get_str(j, ctx, key);
}

inline std::vector<double> get_num_list(const json& j, const std::string& ctx,
                                        const std::string& key) {
    const json& v = require(j, ctx, key);
    if (!v.is_array()) throw config_error(ctx + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw config_error(ctx + "." + key + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::vector<int> get_int_list(const json& j, const std::string& ctx,
                                     const std::string& key) {
    const json& v = require(j, ctx, key);
    if (!v.is_array()) throw config_error(ctx + "." + key + ": expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer())
            throw config_error(ctx + "." + key + ": expected an array of integers");
        out.push_back(e.get<int>());
    }
    return out;
}

inline std::vector<int> get_int_list(const json& j, const std::string& ctx,
                                     const std::string& key, std::vector<int> def) {
    if (!j.is_object() || !j.contains(key)) return def;
    return get_int_list(j, ctx, key);
}

inline json get_obj(const json& j, const std::string& ctx, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) return json::object();
    const json& v = j.at(key);
    if (!v.is_object()) throw config_error(ctx + "." + key + ": expected an object");
    return v;
}

}  // namespace wbe::cfg
