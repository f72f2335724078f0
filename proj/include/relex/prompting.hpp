#pragma once

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relex/chat.hpp"
#include "relex/schema.hpp"
#include "relex/template_engine.hpp"

namespace relex {

// One in-context demonstration. Candidate fields are only meaningful for
// refinement examples; grounding examples leave them empty.
struct IclExample {
  std::string id;
  std::string sentence;
  std::string entity1;
  std::string entity2;
  std::string dp_info;
  std::string gold;
  std::optional<std::string> candidate;
  std::vector<std::array<std::string, 3>> all_candidates;

  static IclExample from_json(const nlohmann::json& j) {
    IclExample ex;
    ex.id = j.value("id", "");
    ex.sentence = j.at("sentence").get<std::string>();
    ex.entity1 = j.at("entity1").get<std::string>();
    ex.entity2 = j.at("entity2").get<std::string>();
    ex.dp_info = j.at("dp_info").get<std::string>();
    ex.gold = j.at("gold").get<std::string>();
    if (j.contains("candidate")) ex.candidate = j.at("candidate").get<std::string>();
    if (j.contains("all_candidates"))
      for (const nlohmann::json& c : j.at("all_candidates"))
        ex.all_candidates.push_back({c.at(0).get<std::string>(), c.at(1).get<std::string>(),
                                     c.at(2).get<std::string>()});
    return ex;
  }
};

inline std::vector<IclExample> load_icl_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ICL pool: " + path);
  std::vector<IclExample> pool;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    pool.push_back(IclExample::from_json(nlohmann::json::parse(line)));
  }
  return pool;
}

struct RenderedPrompt {
  std::string template_id;
  std::vector<ChatMessage> messages;
  std::map<std::string, std::string> substitutions;

  // All message content, in order. The scripted backend matches on this.
  std::string text() const {
    std::string out;
    for (size_t i = 0; i < messages.size(); ++i) {
      if (i) out += '\n';
      out += messages[i].content;
    }
    return out;
  }
};

// The five template assets. Loaded once, immutable afterwards.
class PromptLibrary {
 public:
  PromptTemplate describe_grounding;
  PromptTemplate describe_refinement;
  PromptTemplate simplify;
  PromptTemplate ground;
  PromptTemplate refine;

  static PromptLibrary load(const std::string& dir) {
    PromptLibrary lib;
    lib.describe_grounding =
        PromptTemplate::load_file(dir + "/describe_grounding.txt", "describe_grounding");
    lib.describe_refinement =
        PromptTemplate::load_file(dir + "/describe_refinement.txt", "describe_refinement");
    lib.simplify = PromptTemplate::load_file(dir + "/simplify.txt", "simplify");
    lib.ground = PromptTemplate::load_file(dir + "/ground.txt", "ground");
    lib.refine = PromptTemplate::load_file(dir + "/refine.txt", "refine");
    return lib;
  }

  std::map<std::string, std::string> digests() const {
    return {{"describe_grounding", describe_grounding.digest()},
            {"describe_refinement", describe_refinement.digest()},
            {"simplify", simplify.digest()},
            {"ground", ground.digest()},
            {"refine", refine.digest()}};
  }
};

namespace detail {

inline RenderedPrompt single_user_prompt(const PromptTemplate& tmpl,
                                         std::map<std::string, std::string> values) {
  RenderedPrompt prompt;
  prompt.template_id = tmpl.id;
  prompt.messages.push_back({"user", render_template(tmpl, values)});
  prompt.substitutions = std::move(values);
  return prompt;
}

inline std::string nested_candidates_text(
    const std::vector<std::array<std::string, 3>>& candidates) {
  std::string out = "[";
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (i) out += ", ";
    out += "[\"" + candidates[i][0] + "\", \"" + candidates[i][1] + "\", \"" + candidates[i][2] +
           "\"]";
  }
  out += ']';
  return out;
}

// Renders "— Examples —" plus one block per demonstration, or an empty
// string when there are none. Refinement examples carry the two candidate
// lines that grounding examples lack.
inline std::string examples_block(const RelationSchema& schema,
                                  const std::vector<IclExample>& icl, bool refinement) {
  if (icl.empty()) return "";
  std::string out = "— Examples —\n";
  for (size_t i = 0; i < icl.size(); ++i) {
    const IclExample& ex = icl[i];
    if (!schema.contains(ex.gold))
      throw std::invalid_argument("ICL example " + (ex.id.empty() ? std::to_string(i + 1) : ex.id) +
                                  ": gold label '" + ex.gold + "' not in schema " + schema.name());
    if (i) out += "\n\n";
    out += "Example " + std::to_string(i + 1) + ":\n";
    out += "Sentence: " + ex.sentence + "\n";
    out += "Entity 1: " + ex.entity1 + "    Entity 2: " + ex.entity2 + "\n";
    out += "Dependency Parsing Information: " + ex.dp_info + "\n";
    out += "All possible relations are: " + schema.relations_list_text() + "\n";
    if (refinement) {
      std::vector<std::array<std::string, 3>> all = ex.all_candidates;
      if (all.empty()) all.push_back({ex.entity1, ex.entity2, ex.candidate.value_or(kFailLabel)});
      out += "Candidate Relation for Entity 1 and Entity 2: " + ex.candidate.value_or(kFailLabel) +
             "\n";
      out += "All Candidate Relations for the sentence: " + nested_candidates_text(all) + "\n";
    }
    out += "\nAnswer:\n{ \"relationship\": \"" + ex.gold + "\" }";
  }
  out += "\n\n";
  return out;
}

}  // namespace detail

// Conversion prompt, grounding flavor: describe only the SDP between the
// entities.
inline RenderedPrompt render_describe_grounding(const PromptLibrary& lib,
                                                const std::string& sentence,
                                                const std::string& entity1,
                                                const std::string& entity2,
                                                const std::string& sdp_text) {
  return detail::single_user_prompt(lib.describe_grounding, {{"sentence", sentence},
                                                             {"entity1", entity1},
                                                             {"entity2", entity2},
                                                             {"sdp", sdp_text}});
}

// Conversion prompt, refinement flavor: describe the whole tree.
inline RenderedPrompt render_describe_refinement(const PromptLibrary& lib,
                                                 const std::string& sentence,
                                                 const std::string& tree_text) {
  return detail::single_user_prompt(lib.describe_refinement,
                                    {{"sentence", sentence}, {"dp_tree", tree_text}});
}

inline RenderedPrompt render_simplify(const PromptLibrary& lib, const std::string& sentence,
                                      const std::string& entity1, const std::string& entity2,
                                      const std::string& sdp_text) {
  if (sentence.empty()) throw std::invalid_argument("render_simplify: empty sentence");
  return detail::single_user_prompt(lib.simplify, {{"sentence", sentence},
                                                   {"entity1", entity1},
                                                   {"entity2", entity2},
                                                   {"sdp", sdp_text}});
}

inline RenderedPrompt render_ground(const PromptLibrary& lib, const RelationSchema& schema,
                                    const std::string& sentence, const std::string& entity1,
                                    const std::string& entity2, const std::string& dp_info,
                                    const std::vector<IclExample>& icl = {}) {
  return detail::single_user_prompt(
      lib.ground, {{"definitions", schema.definitions_block()},
                   {"no_relation", schema.no_relation_label()},
                   {"examples_block", detail::examples_block(schema, icl, false)},
                   {"sentence", sentence},
                   {"entity1", entity1},
                   {"entity2", entity2},
                   {"dp_info", dp_info},
                   {"relations", schema.relations_list_text()}});
}

// `candidate` is a schema label or the Fail sentinel; `all_candidates` must
// contain the (entity1, entity2) pair.
inline RenderedPrompt render_refine(const PromptLibrary& lib, const RelationSchema& schema,
                                    const std::string& sentence, const std::string& entity1,
                                    const std::string& entity2, const std::string& dp_info,
                                    const std::string& candidate,
                                    const std::vector<std::array<std::string, 3>>& all_candidates,
                                    const std::vector<IclExample>& icl = {}) {
  bool pair_listed = false;
  for (const auto& c : all_candidates)
    if (c[0] == entity1 && c[1] == entity2) pair_listed = true;
  if (!pair_listed)
    throw std::invalid_argument("render_refine: pair (" + entity1 + ", " + entity2 +
                                ") missing from candidate list");
  return detail::single_user_prompt(
      lib.refine, {{"definitions", schema.definitions_block()},
                   {"no_relation", schema.no_relation_label()},
                   {"examples_block", detail::examples_block(schema, icl, true)},
                   {"sentence", sentence},
                   {"entity1", entity1},
                   {"entity2", entity2},
                   {"dp_info", dp_info},
                   {"relations", schema.relations_list_text()},
                   {"candidate", candidate},
                   {"all_candidates", detail::nested_candidates_text(all_candidates)}});
}

// Deterministic sample of k distinct pool entries. Partial Fisher-Yates over
// indices with a fixed engine, so the same seed reproduces the same draw on
// every platform.
inline std::vector<IclExample> select_icl_examples(const std::vector<IclExample>& pool, size_t k,
                                                   std::uint64_t seed) {
  if (k > pool.size())
    throw std::invalid_argument("ICL pool of " + std::to_string(pool.size()) +
                                " cannot supply " + std::to_string(k) + " examples");
  std::mt19937_64 rng(seed);
  std::vector<size_t> indices(pool.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  for (size_t i = 0; i < k; ++i)
    std::swap(indices[i], indices[i + rng() % (indices.size() - i)]);
  std::vector<IclExample> out;
  out.reserve(k);
  for (size_t i = 0; i < k; ++i) out.push_back(pool[indices[i]]);
  return out;
}

class ResponseParseError : public std::runtime_error {
 public:
  enum class Kind { NoJson, MissingKey, UnknownLabel };

  ResponseParseError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

// Yields every balanced {...} span, leftmost first, skipping brace
// characters inside string literals. Nested objects show up after their
// enclosing object.
inline std::vector<std::string> json_object_candidates(const std::string& text) {
  std::vector<std::string> spans;
  for (size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"')
        in_string = true;
      else if (c == '{')
        ++depth;
      else if (c == '}') {
        --depth;
        if (depth == 0) {
          spans.push_back(text.substr(start, i - start + 1));
          break;
        }
      }
    }
  }
  return spans;
}

inline std::optional<std::string> extract_json_string_field(const std::string& text,
                                                            const std::string& key,
                                                            bool& saw_object) {
  for (const std::string& span : json_object_candidates(text)) {
    nlohmann::json parsed = nlohmann::json::parse(span, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    saw_object = true;
    if (parsed.contains(key) && parsed.at(key).is_string())
      return parsed.at(key).get<std::string>();
  }
  return std::nullopt;
}

}  // namespace detail

// Pulls the predicted label out of raw model output. The output may wrap the
// JSON answer in prose or code fences; the first object carrying a
// "relationship" key wins. Throws ResponseParseError with a distinct kind for
// each failure so callers can apply their configured policy.
inline std::string parse_relationship_response(const std::string& text,
                                               const RelationSchema& schema) {
  bool saw_object = false;
  std::optional<std::string> value =
      detail::extract_json_string_field(text, "relationship", saw_object);
  if (!value) {
    if (saw_object)
      throw ResponseParseError(ResponseParseError::Kind::MissingKey,
                               "no \"relationship\" key in structured answer");
    throw ResponseParseError(ResponseParseError::Kind::NoJson, "no structured answer");
  }
  std::optional<std::string> label = schema.canonical(*value);
  if (!label)
    throw ResponseParseError(ResponseParseError::Kind::UnknownLabel,
                             "label '" + *value + "' matches no " + schema.name() + " label");
  return *label;
}

// The simplification template tells the model to return the original sentence
// when in doubt; parsing applies the same fallback, so this never fails.
inline std::string parse_simplified_response(const std::string& text,
                                             const std::string& original) {
  bool saw_object = false;
  std::optional<std::string> value =
      detail::extract_json_string_field(text, "Simplified sentence", saw_object);
  if (value && !value->empty()) return *value;
  return original;
}

}  // namespace relex
