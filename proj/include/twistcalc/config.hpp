#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "twistcalc/geometry.hpp"

namespace twistcalc {

// Line-oriented grammar:
//   # comment              (also after a value)
//   [section]
//   key = value            (keys may repeat; repeated values are kept in order)
// Numbers in lists are separated by commas or spaces; a tuple of points separates points with '|'.
class Config {
public:
    static Config parse(std::string_view text, const std::string& source = "<string>");
    static Config load(const std::string& path);

    const std::string& text() const { return text_; }
    const std::string& source() const { return source_; }

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    // Last value of a key; ConfigError when absent.
    const std::string& get(const std::string& section, const std::string& key) const;
    std::optional<std::string> find(const std::string& section, const std::string& key) const;
    std::vector<std::string> all(const std::string& section, const std::string& key) const;

    double number(const std::string& section, const std::string& key) const;
    double number_or(const std::string& section, const std::string& key, double fallback) const;
    int integer(const std::string& section, const std::string& key) const;
    int integer_or(const std::string& section, const std::string& key, int fallback) const;
    std::vector<double> numbers(const std::string& section, const std::string& key) const;
    PointTuple points(const std::string& section, const std::string& key, int dim) const;

    // ConfigError naming the first key outside the allowed set.
    void require_known(const std::string& section, const std::set<std::string>& keys) const;
    std::vector<std::string> sections() const;

private:
    std::string text_;
    std::string source_;
    std::map<std::string, std::map<std::string, std::vector<std::string>>> entries_;
    std::map<std::string, int> lines_;  // "section.key" -> first line, for messages
};

double parse_number(const std::string& token, const std::string& where);
std::vector<double> parse_numbers(const std::string& value, const std::string& where);
PointTuple parse_points(const std::string& value, int dim, const std::string& where);

// [molecule]: dim, electrons, external, repeated "nucleus = Z @ coordinates", nuclear_repulsion.
MoleculeConfig molecule_from(const Config& c);

// Hex SHA-256 of the configuration text.
std::string config_hash(const Config& c);

}  // namespace twistcalc
