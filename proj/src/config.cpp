#include "twistcalc/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "twistcalc/errors.hpp"

namespace twistcalc {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    });
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
    Config c;
    c.text_ = std::string(text);
    c.source_ = source;
    std::string section;
    std::istringstream in(c.text_);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(std::string_view(raw).substr(0, hash));
        if (s.empty()) continue;
        const std::string where = source + ":" + std::to_string(line);
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(std::string_view(s).substr(1, s.size() - 2));
            if (!valid_name(section)) throw ConfigError(where + ": bad section name '" + section + "'");
            c.entries_[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        if (section.empty()) throw ConfigError(where + ": key outside any section");
        const std::string key = trim(std::string_view(s).substr(0, eq));
        const std::string value = trim(std::string_view(s).substr(eq + 1));
        if (!valid_name(key)) throw ConfigError(where + ": bad key '" + key + "'");
        if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
        c.entries_[section][key].push_back(value);
        c.lines_.emplace(section + "." + key, line);
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
}

bool Config::has_section(const std::string& section) const { return entries_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& key) const {
    auto s = entries_.find(section);
    return s != entries_.end() && s->second.count(key) > 0;
}

const std::string& Config::get(const std::string& section, const std::string& key) const {
    auto s = entries_.find(section);
    if (s == entries_.end()) throw ConfigError(source_ + ": missing section [" + section + "]");
    auto k = s->second.find(key);
    if (k == s->second.end()) throw ConfigError(source_ + ": missing key '" + key + "' in [" + section + "]");
    return k->second.back();
}

std::optional<std::string> Config::find(const std::string& section, const std::string& key) const {
    if (!has(section, key)) return std::nullopt;
    return get(section, key);
}

std::vector<std::string> Config::all(const std::string& section, const std::string& key) const {
    if (!has(section, key)) return {};
    return entries_.at(section).at(key);
}

double parse_number(const std::string& token, const std::string& where) {
    const std::string t = trim(token);
    if (t == "pi") return M_PI;
    if (t == "-pi") return -M_PI;
    double v = 0.0;
    const auto* end = t.data() + t.size();
    auto [p, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v))
        throw ConfigError(where + ": '" + t + "' is not a finite number");
    return v;
}

std::vector<double> parse_numbers(const std::string& value, const std::string& where) {
    std::string s = value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_number(tok, where));
    if (out.empty()) throw ConfigError(where + ": empty number list");
    return out;
}

PointTuple parse_points(const std::string& value, int dim, const std::string& where) {
    PointTuple out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto bar = value.find('|', start);
        const std::string part = value.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
        const auto v = parse_numbers(part, where);
        if (int(v.size()) != dim)
            throw ConfigError(where + ": point '" + trim(part) + "' needs " + std::to_string(dim) + " coordinates");
        out.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), dim));
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    return out;
}

double Config::number(const std::string& section, const std::string& key) const {
    return parse_number(get(section, key), source_ + " [" + section + "] " + key);
}

double Config::number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

int Config::integer(const std::string& section, const std::string& key) const {
    const double v = number(section, key);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ConfigError(source_ + " [" + section + "] " + key + ": expected an integer");
    return int(v);
}

int Config::integer_or(const std::string& section, const std::string& key, int fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
    return parse_numbers(get(section, key), source_ + " [" + section + "] " + key);
}

PointTuple Config::points(const std::string& section, const std::string& key, int dim) const {
    return parse_points(get(section, key), dim, source_ + " [" + section + "] " + key);
}

void Config::require_known(const std::string& section, const std::set<std::string>& keys) const {
    auto s = entries_.find(section);
    if (s == entries_.end()) return;
    for (const auto& [k, v] : s->second)
        if (!keys.count(k))
            throw ConfigError(source_ + ":" + std::to_string(lines_.at(section + "." + k)) + ": unknown key '" + k +
                              "' in [" + section + "]");
}

std::vector<std::string> Config::sections() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

MoleculeConfig molecule_from(const Config& c) {
    c.require_known("molecule", {"dim", "electrons", "external", "nucleus", "nuclear_repulsion"});
    const int dim = c.integer("molecule", "dim");
    const int N = c.integer("molecule", "electrons");
    const int k = c.integer("molecule", "external");
    std::vector<Nucleus> nuclei;
    for (const auto& v : c.all("molecule", "nucleus")) {
        const auto at = v.find('@');
        const std::string where = c.source() + " [molecule] nucleus";
        if (at == std::string::npos) throw ConfigError(where + ": expected 'Z @ coordinates'");
        const double Z = parse_number(v.substr(0, at), where);
        const auto pos = parse_points(v.substr(at + 1), dim, where);
        if (pos.size() != 1) throw ConfigError(where + ": one position per nucleus");
        nuclei.push_back({pos[0], Z});
    }
    std::optional<double> e0;
    if (c.has("molecule", "nuclear_repulsion")) e0 = c.number("molecule", "nuclear_repulsion");
    try {
        return MoleculeConfig::make(dim, N, k, nuclei, e0);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(c.source() + " [molecule]: " + e.what());
    }
}

std::string config_hash(const Config& c) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(c.text().data(), c.text().size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return out.str();
}

}  // namespace twistcalc
