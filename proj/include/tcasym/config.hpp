#pragma once

// Flat key = value parameter files (a TOML subset: bare keys, numeric values,
// '#' comments, optional [section] headers which are ignored).

#include <tcasym/model.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcasym {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double parse_number(const std::string& key, std::string v) {
    v.erase(std::remove(v.begin(), v.end(), '_'), v.end());  // TOML digit separators
    double out = 0.0;
    const char* first = v.data();
    const char* last = v.data() + v.size();
    if (!v.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
    return out;
}

}  // namespace detail

/// Parses the text of a flat config into key -> number.
inline std::map<std::string, double> parse_flat_config(std::istream& in) {
    std::map<std::string, double> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty() || t.front() == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(std::string_view(t).substr(0, eq));
        std::string val = detail::trim(std::string_view(t).substr(eq + 1));
        if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv[key] = detail::parse_number(key, val);
    }
    return kv;
}

inline MarketParams params_from_map(const std::map<std::string, double>& kv) {
    static const std::vector<std::string> required = {"mu", "sigma", "r", "p", "lambda", "beta", "T"};
    std::vector<std::string> missing;
    for (const auto& k : required)
        if (!kv.count(k)) missing.push_back(k);
    if (!missing.empty()) {
        std::string msg = "missing config key(s):";
        for (const auto& k : missing) msg += " " + k;
        throw ConfigError(msg);
    }
    MarketParams m;
    m.mu = kv.at("mu");
    m.sigma = kv.at("sigma");
    m.r = kv.at("r");
    m.p = kv.at("p");
    m.lambda = kv.at("lambda");
    m.beta = kv.at("beta");
    m.T = kv.at("T");
    if (auto it = kv.find("t0"); it != kv.end()) m.t0 = it->second;
    return m;
}

inline MarketParams parse_params(const std::string& text) {
    std::istringstream in(text);
    return params_from_map(parse_flat_config(in));
}

inline MarketParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return params_from_map(parse_flat_config(in));
}

inline std::string format_params(const MarketParams& m) {
    std::ostringstream os;
    os.precision(17);
    os << "mu = " << m.mu << "\nsigma = " << m.sigma << "\nr = " << m.r << "\np = " << m.p
       << "\nlambda = " << m.lambda << "\nbeta = " << m.beta << "\nT = " << m.T << "\nt0 = " << m.t0 << "\n";
    return os.str();
}

}  // namespace tcasym
