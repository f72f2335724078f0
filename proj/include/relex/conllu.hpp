#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace relex {

struct Token {
  int index = 0;  // 1-based position in the sentence
  std::string form;
  std::optional<std::string> lemma;
  std::optional<std::string> upos;
  int head = 0;  // 0 = root
  std::string deprel;

  bool operator==(const Token&) const = default;
};

// One sentence with its dependency tree. Immutable after construction.
struct DependencyTree {
  std::string sentence_id;
  std::string text;
  std::vector<Token> tokens;

  bool operator==(const DependencyTree&) const = default;

  int size() const { return static_cast<int>(tokens.size()); }

  const Token& token(int index) const {  // 1-based
    if (index < 1 || index > size())
      throw std::out_of_range("token index " + std::to_string(index) +
                              " outside 1.." + std::to_string(size()));
    return tokens[static_cast<size_t>(index - 1)];
  }

  int root_index() const {
    for (const Token& t : tokens)
      if (t.head == 0) return t.index;
    return 0;
  }

  // children[i] lists dependents of token i (index 0 unused).
  std::vector<std::vector<int>> child_lists() const {
    std::vector<std::vector<int>> children(tokens.size() + 1);
    for (const Token& t : tokens)
      if (t.head >= 1 && t.head <= size()) children[static_cast<size_t>(t.head)].push_back(t.index);
    return children;
  }
};

struct ConlluError {
  std::string sentence_id;
  int line = 0;  // 1-based line in the input stream
  std::string message;
};

struct ConlluDocument {
  std::vector<DependencyTree> trees;
  std::vector<ConlluError> errors;
};

// Structural checks shared by the parser and `parse` CLI validation.
inline std::vector<std::string> validate_tree(const DependencyTree& tree) {
  std::vector<std::string> violations;
  const int n = tree.size();
  if (n == 0) {
    violations.push_back("empty sentence");
    return violations;
  }
  for (int i = 0; i < n; ++i) {
    const Token& t = tree.tokens[static_cast<size_t>(i)];
    if (t.index != i + 1)
      violations.push_back("non-contiguous token index " + std::to_string(t.index) +
                           " at position " + std::to_string(i + 1));
    if (t.head == t.index)
      violations.push_back("self-loop at token " + std::to_string(t.index));
    if (t.head < 0 || t.head > n)
      violations.push_back("head " + std::to_string(t.head) + " of token " +
                           std::to_string(t.index) + " outside 0.." + std::to_string(n));
    if (t.deprel.empty())
      violations.push_back("missing deprel at token " + std::to_string(t.index));
  }
  if (!violations.empty()) return violations;

  int roots = 0;
  for (const Token& t : tree.tokens)
    if (t.head == 0) ++roots;
  if (roots == 0) violations.push_back("no root token");
  if (roots > 1) violations.push_back(std::to_string(roots) + " root tokens");

  // A walk longer than n steps can only mean a head cycle.
  for (const Token& t : tree.tokens) {
    int cur = t.index;
    int steps = 0;
    while (cur != 0 && steps <= n) {
      cur = tree.token(cur).head;
      ++steps;
    }
    if (cur != 0) {
      violations.push_back("cyclic heads involving token " + std::to_string(t.index));
      break;
    }
  }
  return violations;
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

inline bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

inline std::optional<std::string> opt_field(const std::string& s) {
  if (s == "_" || s.empty()) return std::nullopt;
  return s;
}

struct RawSentence {
  std::string sentence_id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<int> token_lines;
  int first_line = 0;
  bool saw_content = false;
};

inline void flush_sentence(RawSentence& raw, int ordinal, ConlluDocument& doc,
                           std::vector<ConlluError>& pending) {
  if (!raw.saw_content) return;
  if (raw.sentence_id.empty()) raw.sentence_id = std::to_string(ordinal);
  for (ConlluError& e : pending) e.sentence_id = raw.sentence_id;

  bool rejected = !pending.empty();
  DependencyTree tree{raw.sentence_id, raw.text, raw.tokens};
  if (!rejected) {
    std::vector<std::string> violations = validate_tree(tree);
    for (const std::string& v : violations)
      pending.push_back({raw.sentence_id, raw.first_line, v});
    rejected = !violations.empty();
  }
  if (rejected)
    doc.errors.insert(doc.errors.end(), pending.begin(), pending.end());
  else
    doc.trees.push_back(std::move(tree));
  pending.clear();
  raw = RawSentence{};
}

}  // namespace detail

// Reads a CoNLL-U document. Multiword-token ("2-4") and empty-node ("5.1")
// lines are skipped. A malformed sentence is reported and dropped; the rest
// of the document is still parsed.
inline ConlluDocument parse_conllu(std::istream& in) {
  ConlluDocument doc;
  detail::RawSentence raw;
  std::vector<ConlluError> pending;
  int ordinal = 0;
  int line_no = 0;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line.empty()) {
      if (raw.saw_content) ++ordinal;
      detail::flush_sentence(raw, ordinal, doc, pending);
      continue;
    }
    if (!raw.saw_content) raw.first_line = line_no;
    raw.saw_content = true;

    if (line[0] == '#') {
      const std::string sent_id_prefix = "# sent_id = ";
      const std::string text_prefix = "# text = ";
      if (line.rfind(sent_id_prefix, 0) == 0) raw.sentence_id = line.substr(sent_id_prefix.size());
      if (line.rfind(text_prefix, 0) == 0) raw.text = line.substr(text_prefix.size());
      continue;
    }

    std::vector<std::string> f = detail::split_tabs(line);
    if (f.size() != 10) {
      pending.push_back({"", line_no,
                         "expected 10 tab-separated fields, got " + std::to_string(f.size())});
      continue;
    }
    const std::string& id = f[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos)
      continue;  // multiword range or empty node
    if (!detail::all_digits(id)) {
      pending.push_back({"", line_no, "non-integer token id '" + id + "'"});
      continue;
    }
    if (!detail::all_digits(f[6])) {
      pending.push_back({"", line_no, "non-integer head '" + f[6] + "' at token " + id});
      continue;
    }

    Token tok;
    tok.index = std::stoi(id);
    tok.form = f[1];
    tok.lemma = detail::opt_field(f[2]);
    tok.upos = detail::opt_field(f[3]);
    tok.head = std::stoi(f[6]);
    tok.deprel = detail::opt_field(f[7]).value_or("");
    raw.tokens.push_back(std::move(tok));
    raw.token_lines.push_back(line_no);
  }
  if (raw.saw_content) ++ordinal;
  detail::flush_sentence(raw, ordinal, doc, pending);
  return doc;
}

inline ConlluDocument parse_conllu(const std::string& content) {
  std::istringstream in(content);
  return parse_conllu(in);
}

inline ConlluDocument parse_conllu_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CoNLL-U file: " + path);
  return parse_conllu(in);
}

inline std::string serialize_conllu(const DependencyTree& tree) {
  std::ostringstream out;
  out << "# sent_id = " << tree.sentence_id << "\n";
  if (!tree.text.empty()) out << "# text = " << tree.text << "\n";
  for (const Token& t : tree.tokens) {
    out << t.index << '\t' << t.form << '\t' << t.lemma.value_or("_") << '\t'
        << t.upos.value_or("_") << '\t' << '_' << '\t' << '_' << '\t' << t.head << '\t'
        << t.deprel << '\t' << '_' << '\t' << '_' << '\n';
  }
  out << "\n";
  return out.str();
}

inline std::string serialize_conllu(const std::vector<DependencyTree>& trees) {
  std::string out;
  for (const DependencyTree& t : trees) out += serialize_conllu(t);
  return out;
}

}  // namespace relex
