#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vtd/array.hpp"
#include "vtd/data.hpp"

namespace vtd::io {

// 17 significant digits: shortest text that always round-trips a 64-bit
// real losslessly through strtod.
std::string fmt17(double v);

// ---- dataset JSONL ---------------------------------------------------------
// Line 1: header {"n_patients","n_steps","n_covariates","n_confounders","fields"}.
// Lines 2..N+1: one patient record each. Numeric payloads are decimal text
// at 17 significant digits, so save/load round-trips bitwise.

void save_dataset(const data::LongitudinalDataset& d, const std::string& path);
data::LongitudinalDataset load_dataset(const std::string& path);

// ---- parameter manifests (.vtd.json) ---------------------------------------

using ParamList = std::vector<std::pair<std::string, diff::Array>>;

void save_params(const std::string& path, const std::string& model,
                 const std::map<std::string, std::string>& meta, const ParamList& params);

struct ParamFile {
    std::string model;
    std::map<std::string, std::string> meta;
    ParamList params;
};
ParamFile load_params(const std::string& path);

// ---- flat key=value config files -------------------------------------------
// One `section.key = value` per line; '#' starts a comment.

class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    const std::map<std::string, std::string>& entries() const { return kv_; }

    // Reject unknown keys early so typos do not silently fall back to
    // defaults. Entries ending in '.' match as prefixes, others exactly.
    void check_known(const std::vector<std::string>& known) const;

private:
    std::map<std::string, std::string> kv_;
};

} // namespace vtd::io
