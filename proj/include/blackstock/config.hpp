#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace blackstock {

// Flat INI-style config: bracketed section headers, key = value lines,
// '#'/';' comments. Sections and keys are kept sorted so emit() is
// deterministic and parse(emit(c)) == c.
struct config {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& sec, const std::string& key,
                  const std::string& dflt) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return dflt;
    auto k = s->second.find(key);
    return k == s->second.end() ? dflt : k->second;
  }

  double get_double(const std::string& sec, const std::string& key,
                    double dflt) const {
    if (!has(sec, key)) return dflt;
    const std::string v = get(sec, key, "");
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw std::runtime_error("config: [" + sec + "] " + key +
                               " is not a number: '" + v + "'");
    return x;
  }

  long get_int(const std::string& sec, const std::string& key, long dflt) const {
    if (!has(sec, key)) return dflt;
    const std::string v = get(sec, key, "");
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw std::runtime_error("config: [" + sec + "] " + key +
                               " is not an integer: '" + v + "'");
    return x;
  }

  bool get_bool(const std::string& sec, const std::string& key, bool dflt) const {
    if (!has(sec, key)) return dflt;
    std::string v = get(sec, key, "");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: [" + sec + "] " + key +
                             " is not a boolean: '" + v + "'");
  }

  void set(const std::string& sec, const std::string& key,
           const std::string& value) {
    sections[sec][key] = value;
  }

  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static config parse_text(const std::string& text) {
    config c;
    std::istringstream in(text);
    std::string line, sec;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw std::runtime_error("config line " + std::to_string(lineno) +
                                   ": unterminated section header");
        sec = trim(t.substr(1, t.size() - 2));
        if (sec.empty())
          throw std::runtime_error("config line " + std::to_string(lineno) +
                                   ": empty section name");
        c.sections[sec];
        continue;
      }
      std::size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected key = value");
      std::string key = trim(t.substr(0, eq));
      std::string val = trim(t.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": empty key");
      if (sec.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": key outside any [section]");
      c.sections[sec][key] = val;
    }
    return c;
  }

  static config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
  }

  std::string emit() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [sec, kv] : sections) {
      if (!first) out << '\n';
      first = false;
      out << '[' << sec << "]\n";
      for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
    }
    return out.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << emit();
  }

  bool operator==(const config& o) const { return sections == o.sections; }
};

}  // namespace blackstock
