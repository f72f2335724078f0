#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "relex/digest.hpp"

namespace relex {

// A prompt template: UTF-8 text with $lower_snake placeholders. Stored as an
// external asset and treated as frozen bytes; golden tests compare renders
// byte for byte.
struct PromptTemplate {
  std::string id;
  std::string text;

  std::string digest() const { return digest_hex(text); }

  static PromptTemplate load_file(const std::string& path, const std::string& id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open template file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return PromptTemplate{id, ss.str()};
  }
};

// Substitutes every placeholder in a single left-to-right pass. Values are
// inserted verbatim and never re-scanned, so a '$' inside a value cannot
// trigger another substitution. Each provided key must be consumed exactly
// once and no unknown placeholder may remain.
inline std::string render_template(const PromptTemplate& tmpl,
                                   const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.text.size());
  std::set<std::string> used;

  size_t i = 0;
  while (i < tmpl.text.size()) {
    char c = tmpl.text[i];
    if (c != '$') {
      out += c;
      ++i;
      continue;
    }
    size_t j = i + 1;
    // Placeholder names: lowercase letter first, then [a-z0-9_].
    if (j < tmpl.text.size() && std::islower(static_cast<unsigned char>(tmpl.text[j]))) {
      ++j;
      while (j < tmpl.text.size() &&
             (std::islower(static_cast<unsigned char>(tmpl.text[j])) ||
              std::isdigit(static_cast<unsigned char>(tmpl.text[j])) || tmpl.text[j] == '_'))
        ++j;
    }
    std::string name = tmpl.text.substr(i + 1, j - i - 1);
    if (name.empty()) {  // a bare '$' in the template body
      out += c;
      ++i;
      continue;
    }
    auto it = values.find(name);
    if (it == values.end())
      throw std::invalid_argument("template " + tmpl.id + ": no value for placeholder $" + name);
    if (!used.insert(name).second)
      throw std::invalid_argument("template " + tmpl.id + ": placeholder $" + name +
                                  " appears more than once");
    out += it->second;
    i = j;
  }

  for (const auto& [name, value] : values)
    if (!used.count(name))
      throw std::invalid_argument("template " + tmpl.id + ": unused substitution key '" + name +
                                  "'");
  return out;
}

}  // namespace relex
