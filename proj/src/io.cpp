#include "vtd/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vtd::io {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void emit_vec(std::string& s, const std::vector<double>& v) {
    s += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt17(v[i]);
    }
    s += ']';
}

void emit_mat(std::string& s, const std::vector<std::vector<double>>& m) {
    s += '[';
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i) s += ',';
        emit_vec(s, m[i]);
    }
    s += ']';
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open for reading");
    return in;
}

[[noreturn]] void line_error(const std::string& path, std::size_t lineno, const std::string& msg) {
    throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": " + msg);
}

const json& require_field(const json& j, const char* name, const std::string& path,
                          std::size_t lineno) {
    auto it = j.find(name);
    if (it == j.end()) line_error(path, lineno, std::string("missing required field '") + name + "'");
    return *it;
}

std::vector<double> to_vec(const json& j, const char* name, std::size_t want, const std::string& path,
                           std::size_t lineno) {
    if (!j.is_array() || j.size() != want)
        line_error(path, lineno, std::string("field '") + name + "' must be a list of length " +
                                     std::to_string(want));
    std::vector<double> out;
    out.reserve(want);
    for (const auto& e : j) {
        if (!e.is_number()) line_error(path, lineno, std::string("field '") + name + "' must be numeric");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> to_mat(const json& j, const char* name, std::size_t rows,
                                        std::size_t cols, const std::string& path, std::size_t lineno) {
    if (!j.is_array() || j.size() != rows)
        line_error(path, lineno, std::string("field '") + name + "' must have " + std::to_string(rows) +
                                     " rows");
    std::vector<std::vector<double>> out;
    out.reserve(rows);
    for (const auto& r : j) out.push_back(to_vec(r, name, cols, path, lineno));
    return out;
}

} // namespace

void save_dataset(const data::LongitudinalDataset& d, const std::string& path) {
    std::ofstream out = open_out(path);
    const bool truth = d.has_truth();
    std::string line;
    line += "{\"n_patients\":" + std::to_string(d.patients.size());
    line += ",\"n_steps\":" + std::to_string(d.n_steps);
    line += ",\"n_covariates\":" + std::to_string(d.n_covariates);
    line += ",\"n_confounders\":" + std::to_string(d.n_confounders);
    line += ",\"fields\":[\"x\",\"a\",\"y\",\"mask\"";
    if (truth) line += ",\"z_true\",\"y_both_arms\",\"tau_true\",\"propensity_true\"";
    line += "]}\n";
    out << line;

    for (const auto& p : d.patients) {
        line.clear();
        line += "{\"id\":\"" + p.id + "\",\"x\":";
        emit_mat(line, p.x);
        line += ",\"a\":[";
        for (std::size_t t = 0; t < p.a.size(); ++t) {
            if (t) line += ',';
            line += std::to_string(p.a[t]);
        }
        line += "],\"y\":";
        emit_vec(line, p.y);
        line += ",\"mask\":[";
        for (std::size_t t = 0; t < p.mask.size(); ++t) {
            if (t) line += ',';
            line += p.mask[t] ? "true" : "false";
        }
        line += ']';
        if (p.has_truth) {
            line += ",\"z_true\":";
            emit_mat(line, p.z_true);
            line += ",\"y_both_arms\":[";
            for (std::size_t t = 0; t < p.y_both_arms.size(); ++t) {
                if (t) line += ',';
                line += '[';
                line += fmt17(p.y_both_arms[t][0]);
                line += ',';
                line += fmt17(p.y_both_arms[t][1]);
                line += ']';
            }
            line += "],\"tau_true\":";
            emit_vec(line, p.tau_true);
            line += ",\"propensity_true\":";
            emit_vec(line, p.propensity_true);
        }
        line += "}\n";
        out << line;
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

data::LongitudinalDataset load_dataset(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, missing header");
    ++lineno;
    json hdr;
    try {
        hdr = json::parse(line);
    } catch (const std::exception& e) {
        line_error(path, lineno, std::string("header parse failure: ") + e.what());
    }
    data::LongitudinalDataset d;
    const std::size_t n_pat = require_field(hdr, "n_patients", path, lineno).get<std::size_t>();
    d.n_steps = require_field(hdr, "n_steps", path, lineno).get<std::size_t>();
    d.n_covariates = require_field(hdr, "n_covariates", path, lineno).get<std::size_t>();
    d.n_confounders = require_field(hdr, "n_confounders", path, lineno).get<std::size_t>();

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            line_error(path, lineno, std::string("record parse failure: ") + e.what());
        }
        data::PatientSequence p;
        p.id = require_field(j, "id", path, lineno).get<std::string>();
        p.x = to_mat(require_field(j, "x", path, lineno), "x", d.n_steps, d.n_covariates, path, lineno);
        const json& ja = require_field(j, "a", path, lineno);
        if (!ja.is_array() || ja.size() != d.n_steps)
            line_error(path, lineno, "field 'a' must be a list of length " + std::to_string(d.n_steps));
        for (const auto& e : ja) {
            const int v = e.get<int>();
            if (v != 0 && v != 1) line_error(path, lineno, "field 'a' entries must be 0 or 1");
            p.a.push_back(v);
        }
        p.y = to_vec(require_field(j, "y", path, lineno), "y", d.n_steps, path, lineno);
        if (j.contains("mask")) {
            const json& jm = j["mask"];
            if (!jm.is_array() || jm.size() != d.n_steps)
                line_error(path, lineno,
                           "field 'mask' must be a list of length " + std::to_string(d.n_steps));
            for (const auto& e : jm) p.mask.push_back(e.get<bool>());
        } else {
            p.mask.assign(d.n_steps, true);
        }
        const bool any_truth = j.contains("z_true") || j.contains("y_both_arms") ||
                               j.contains("tau_true") || j.contains("propensity_true");
        if (any_truth) {
            p.has_truth = true;
            p.z_true = to_mat(require_field(j, "z_true", path, lineno), "z_true", d.n_steps,
                              d.n_confounders, path, lineno);
            const json& jb = require_field(j, "y_both_arms", path, lineno);
            if (!jb.is_array() || jb.size() != d.n_steps)
                line_error(path, lineno,
                           "field 'y_both_arms' must have " + std::to_string(d.n_steps) + " rows");
            for (const auto& r : jb) {
                auto v = to_vec(r, "y_both_arms", 2, path, lineno);
                p.y_both_arms.push_back({v[0], v[1]});
            }
            p.tau_true =
                to_vec(require_field(j, "tau_true", path, lineno), "tau_true", d.n_steps, path, lineno);
            p.propensity_true = to_vec(require_field(j, "propensity_true", path, lineno),
                                       "propensity_true", d.n_steps, path, lineno);
        }
        d.patients.push_back(std::move(p));
    }
    if (d.patients.size() != n_pat)
        throw std::runtime_error(path + ": header declares " + std::to_string(n_pat) +
                                 " patients, file has " + std::to_string(d.patients.size()));
    for (std::size_t i = 1; i < d.patients.size(); ++i)
        if (d.patients[i].has_truth != d.patients[0].has_truth)
            throw std::runtime_error(path + ": ground-truth fields present on only some records");
    return d;
}

void save_params(const std::string& path, const std::string& model,
                 const std::map<std::string, std::string>& meta, const ParamList& params) {
    std::ofstream out = open_out(path);
    std::string s = "{\"format\":\"vtd-params\",\"model\":\"" + model + "\",\"meta\":{";
    bool first = true;
    for (const auto& [k, v] : meta) {
        if (!first) s += ',';
        first = false;
        s += json(k).dump() + ":" + json(v).dump();
    }
    s += "},\n\"params\":[\n";
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, arr] = params[i];
        s += "{\"name\":" + json(name).dump() + ",\"shape\":[";
        for (std::size_t d = 0; d < arr.shape().size(); ++d) {
            if (d) s += ',';
            s += std::to_string(arr.shape()[d]);
        }
        s += "],\"data\":";
        emit_vec(s, arr.data());
        s += i + 1 < params.size() ? "},\n" : "}\n";
    }
    s += "]}\n";
    out << s;
    if (!out) throw std::runtime_error(path + ": write failed");
}

ParamFile load_params(const std::string& path) {
    std::ifstream in = open_in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": parse failure: " + e.what());
    }
    if (j.value("format", "") != std::string("vtd-params"))
        throw std::runtime_error(path + ": not a vtd-params file");
    ParamFile f;
    f.model = j.at("model").get<std::string>();
    if (j.contains("meta"))
        for (const auto& [k, v] : j.at("meta").items()) f.meta[k] = v.get<std::string>();
    for (const auto& p : j.at("params")) {
        const std::string name = p.at("name").get<std::string>();
        std::vector<std::size_t> shape = p.at("shape").get<std::vector<std::size_t>>();
        std::vector<double> vals = p.at("data").get<std::vector<double>>();
        f.params.emplace_back(name, diff::Array(std::move(shape), std::move(vals)));
    }
    return f;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return from_string(ss.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

Config Config::from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("line " + std::to_string(lineno) + ": empty key");
        c.kv_[key] = value;
    }
    return c;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw std::runtime_error("config key '" + key + "': '" + it->second + "' is not a number");
    return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        throw std::runtime_error("config key '" + key + "': '" + it->second + "' is not an integer");
    return v;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    std::string item;
    std::istringstream ss(it->second);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0')
            throw std::runtime_error("config key '" + key + "': '" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty())
        throw std::runtime_error("config key '" + key + "': empty list");
    return out;
}

void Config::check_known(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : kv_) {
        bool ok = false;
        for (const auto& pat : known) {
            const bool is_prefix = !pat.empty() && pat.back() == '.';
            if (is_prefix ? k.rfind(pat, 0) == 0 : k == pat) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::runtime_error("config key '" + k + "' is not recognized");
    }
}

} // namespace vtd::io
