#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace relex {

// Label string used for pairs whose grounding produced no usable prediction.
// Never a schema label.
inline const std::string kFailLabel = "Fail";

inline bool is_fail(const std::string& label) { return label == kFailLabel; }

// Case-fold and collapse whitespace. Used to match model output against
// schema labels.
inline std::string normalize_label(const std::string& raw) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

enum class Symmetry { Asymmetric, Symmetric, Generic };

struct RelationDef {
  std::string label;
  Symmetry symmetry = Symmetry::Asymmetric;
  std::string definition;
};

// The relation inventory of one dataset plus the text blocks the prompt
// templates splice in.
class RelationSchema {
 public:
  RelationSchema(std::string name, std::string no_relation_label, std::string intro,
                 std::vector<RelationDef> relations)
      : name_(std::move(name)),
        no_relation_(std::move(no_relation_label)),
        intro_(std::move(intro)),
        relations_(std::move(relations)) {
    for (const RelationDef& r : relations_) {
      if (r.label.empty()) throw std::invalid_argument("schema " + name_ + ": empty label");
      if (r.label == kFailLabel)
        throw std::invalid_argument("schema " + name_ + ": label '" + kFailLabel + "' is reserved");
      if (r.definition.empty())
        throw std::invalid_argument("schema " + name_ + ": no definition for " + r.label);
      if (!by_normalized_.emplace(normalize_label(r.label), r.label).second)
        throw std::invalid_argument("schema " + name_ + ": duplicate label " + r.label);
    }
    if (!contains(no_relation_))
      throw std::invalid_argument("schema " + name_ + ": no-relation label '" + no_relation_ +
                                  "' not in relation list");
  }

  const std::string& name() const { return name_; }
  const std::string& no_relation_label() const { return no_relation_; }
  const std::vector<RelationDef>& relations() const { return relations_; }
  size_t size() const { return relations_.size(); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(relations_.size());
    for (const RelationDef& r : relations_) out.push_back(r.label);
    return out;
  }

  bool contains(const std::string& label) const {
    return std::any_of(relations_.begin(), relations_.end(),
                       [&](const RelationDef& r) { return r.label == label; });
  }

  // Case-insensitive, whitespace-normalized lookup; returns the canonical label.
  std::optional<std::string> canonical(const std::string& raw) const {
    auto it = by_normalized_.find(normalize_label(raw));
    if (it == by_normalized_.end()) return std::nullopt;
    return it->second;
  }

  // `["USED-FOR", "FEATURE-OF", ..., "NO-RELATION"]` in schema order.
  std::string relations_list_text() const {
    std::string out = "[";
    for (size_t i = 0; i < relations_.size(); ++i) {
      if (i) out += ", ";
      out += '"' + relations_[i].label + '"';
    }
    out += ']';
    return out;
  }

  // Intro line followed by the per-class definition sections.
  std::string definitions_block() const {
    std::string out = intro_;
    auto section = [&](Symmetry cls, const std::string& adjective) {
      std::vector<const RelationDef*> members;
      for (const RelationDef& r : relations_)
        if (r.symmetry == cls) members.push_back(&r);
      if (members.empty()) return;
      out += '\n' + adjective + (members.size() == 1 ? " relation type:" : " relation types:");
      for (const RelationDef* r : members) out += "\n- \"" + r->label + "\": " + r->definition;
    };
    section(Symmetry::Asymmetric, "Asymmetric");
    section(Symmetry::Symmetric, "Symmetric");
    section(Symmetry::Generic, "Generic");
    return out;
  }

  static RelationSchema from_json(const nlohmann::json& j) {
    std::vector<RelationDef> relations;
    for (const nlohmann::json& r : j.at("relations")) {
      RelationDef def;
      def.label = r.at("label").get<std::string>();
      std::string sym = r.at("symmetry").get<std::string>();
      if (sym == "asymmetric")
        def.symmetry = Symmetry::Asymmetric;
      else if (sym == "symmetric")
        def.symmetry = Symmetry::Symmetric;
      else if (sym == "generic")
        def.symmetry = Symmetry::Generic;
      else
        throw std::invalid_argument("unknown symmetry tag: " + sym);
      def.definition = r.at("definition").get<std::string>();
      relations.push_back(std::move(def));
    }
    return RelationSchema(j.at("name").get<std::string>(), j.at("no_relation").get<std::string>(),
                          j.at("intro").get<std::string>(), std::move(relations));
  }

  static RelationSchema load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    return from_json(j);
  }

 private:
  std::string name_;
  std::string no_relation_;
  std::string intro_;
  std::vector<RelationDef> relations_;
  std::map<std::string, std::string> by_normalized_;
};

}  // namespace relex
