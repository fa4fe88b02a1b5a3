#ifndef PLANNER_PDDL_HPP
#define PLANNER_PDDL_HPP

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planner/detail/text.hpp"
#include "planner/model.hpp"

namespace planner::pddl {

struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;
  int length = 1;

  std::string describe() const {
    std::ostringstream os;
    os << (file.empty() ? "<string>" : file) << ":" << line << ":" << column;
    return os.str();
  }
};

struct ParseError : Error {
  SourceSpan span;
  ParseError(const SourceSpan &where, const std::string &message)
      : Error(where.describe() + ": " + message), span(where) {}
};

namespace internal {

enum class TokenKind { LParen, RParen, Symbol, Keyword, Variable, End };

struct Token {
  TokenKind kind;
  std::string text; // normalized lower-case, without ':' or '?' prefix
  SourceSpan span;
};

class Lexer {
public:
  Lexer(std::string_view text, std::string file)
      : text_(text), file_(std::move(file)) {}

  Token next() {
    skip_trivia();
    SourceSpan span{file_, line_, col_, 1};
    if (pos_ >= text_.size()) return {TokenKind::End, "", span};
    char c = text_[pos_];
    if (c == '(') {
      advance();
      return {TokenKind::LParen, "(", span};
    }
    if (c == ')') {
      advance();
      return {TokenKind::RParen, ")", span};
    }
    TokenKind kind = TokenKind::Symbol;
    if (c == ':') {
      kind = TokenKind::Keyword;
      advance();
    } else if (c == '?') {
      kind = TokenKind::Variable;
      advance();
    }
    std::string word;
    while (pos_ < text_.size() && !is_delim(text_[pos_])) {
      word.push_back(text_[pos_]);
      advance();
    }
    if (word.empty())
      throw ParseError(span, "unexpected character '" + std::string(1, c) + "'");
    span.length = static_cast<int>(word.size());
    return {kind, planner::detail::to_lower(word), span};
  }

private:
  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == ';' ||
           std::isspace(static_cast<unsigned char>(c));
  }
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
public:
  Parser(std::string_view text, std::string file)
      : lexer_(text, std::move(file)) {
    shift();
  }

  model::Domain parse_domain() {
    model::Domain domain;
    expect(TokenKind::LParen);
    expect_symbol("define");
    expect(TokenKind::LParen);
    expect_symbol("domain");
    domain.name = expect(TokenKind::Symbol).text;
    expect(TokenKind::RParen);

    while (cur_.kind == TokenKind::LParen) {
      Token open = shift();
      Token head = shift();
      if (head.kind != TokenKind::Keyword)
        throw ParseError(head.span, "expected a :section, got '" + head.text + "'");
      if (head.text == "requirements") {
        parse_requirements(domain);
      } else if (head.text == "types") {
        parse_typed_names(domain.types);
      } else if (head.text == "constants") {
        parse_typed_objects(domain.constants);
      } else if (head.text == "predicates") {
        parse_predicates(domain);
      } else if (head.text == "action") {
        parse_action(domain);
      } else {
        throw ParseError(head.span, "unsupported section :" + head.text);
      }
      (void)open;
    }
    expect(TokenKind::RParen);
    expect_end();
    model::check_domain_invariants(domain);
    return domain;
  }

  // a bare "(:action name ...)" fragment, as carried by fix documents
  model::ActionSchema parse_action_fragment() {
    expect(TokenKind::LParen);
    Token head = expect(TokenKind::Keyword);
    if (head.text != "action")
      throw ParseError(head.span, "expected (:action ...), got :" + head.text);
    model::Domain scratch;
    parse_action(scratch);
    expect_end();
    return scratch.actions.front();
  }

  model::Problem parse_problem(const model::Domain &domain) {
    model::Problem problem;
    expect(TokenKind::LParen);
    expect_symbol("define");
    expect(TokenKind::LParen);
    expect_symbol("problem");
    problem.name = expect(TokenKind::Symbol).text;
    expect(TokenKind::RParen);

    while (cur_.kind == TokenKind::LParen) {
      shift();
      Token head = shift();
      if (head.kind != TokenKind::Keyword)
        throw ParseError(head.span, "expected a :section");
      if (head.text == "domain") {
        problem.domain_name = expect(TokenKind::Symbol).text;
        expect(TokenKind::RParen);
        if (problem.domain_name != domain.name)
          throw ParseError(head.span, "problem is for domain '" +
                                          problem.domain_name +
                                          "', loaded domain is '" +
                                          domain.name + "'");
      } else if (head.text == "objects") {
        parse_typed_objects(problem.objects);
      } else if (head.text == "init") {
        while (cur_.kind == TokenKind::LParen) {
          Token at = cur_;
          model::GroundLiteral lit = parse_ground_literal(domain);
          if (lit.negated)
            throw ParseError(at.span, "negative atom in :init");
          problem.init.push_back(lit.atom);
        }
        expect(TokenKind::RParen);
      } else if (head.text == "goal") {
        parse_goal(domain, problem);
        expect(TokenKind::RParen);
      } else {
        throw ParseError(head.span, "unsupported section :" + head.text);
      }
    }
    expect(TokenKind::RParen);
    expect_end();
    return problem;
  }

private:
  Token shift() {
    Token prev = cur_;
    cur_ = lexer_.next();
    return prev;
  }
  Token expect(TokenKind kind) {
    if (cur_.kind != kind) {
      static const char *names[] = {"'('", "')'", "a name", "a :keyword",
                                    "a ?variable", "end of input"};
      throw ParseError(cur_.span,
                       std::string("expected ") + names[static_cast<int>(kind)] +
                           ", got '" + (cur_.text.empty() ? "<eof>" : cur_.text) +
                           "'");
    }
    return shift();
  }
  void expect_symbol(const std::string &word) {
    Token t = expect(TokenKind::Symbol);
    if (t.text != word)
      throw ParseError(t.span, "expected '" + word + "', got '" + t.text + "'");
  }
  void expect_end() {
    if (cur_.kind != TokenKind::End)
      throw ParseError(cur_.span, "trailing content after final ')'");
  }

  void parse_requirements(model::Domain &domain) {
    static const std::set<std::string> supported{"strips", "typing",
                                                 "negative-preconditions"};
    while (cur_.kind == TokenKind::Keyword) {
      Token t = shift();
      if (!supported.count(t.text))
        throw ParseError(t.span, "unsupported requirement :" + t.text);
      domain.requirements.push_back(t.text);
    }
    expect(TokenKind::RParen);
  }

  // names... [- type] repeated; untyped names default to "object".
  // Names are plain symbols in :types/:constants/:objects and ?variables in
  // :parameters; both are accepted here.
  template <typename T> void parse_typed_block(std::vector<T> &out) {
    std::vector<std::string> pending;
    while (true) {
      if (cur_.kind == TokenKind::Symbol && cur_.text == "-") {
        Token dash = shift();
        Token type = expect(TokenKind::Symbol);
        if (pending.empty())
          throw ParseError(dash.span, "'-' with no names before it");
        for (auto &name : pending) out.push_back(T{name, type.text});
        pending.clear();
      } else if (cur_.kind == TokenKind::Symbol ||
                 cur_.kind == TokenKind::Variable) {
        pending.push_back(shift().text);
      } else {
        break;
      }
    }
    for (auto &name : pending) out.push_back(T{name, "object"});
    expect(TokenKind::RParen);
  }
  void parse_typed_names(std::vector<model::TypeDef> &out) {
    std::vector<model::TypedObject> tmp;
    parse_typed_block(tmp);
    for (auto &o : tmp) out.push_back(model::TypeDef{o.name, o.type});
  }
  void parse_typed_objects(std::vector<model::TypedObject> &out) {
    parse_typed_block(out);
  }

  std::vector<model::Parameter> parse_parameter_list() {
    std::vector<model::TypedObject> tmp;
    parse_typed_block(tmp);
    std::vector<model::Parameter> params;
    for (auto &o : tmp) params.push_back(model::Parameter{o.name, o.type});
    return params;
  }

  void parse_predicates(model::Domain &domain) {
    while (cur_.kind == TokenKind::LParen) {
      shift();
      model::Predicate pred;
      pred.name = expect(TokenKind::Symbol).text;
      std::vector<std::string> pending;
      while (true) {
        if (cur_.kind == TokenKind::Variable) {
          pending.push_back(shift().text);
        } else if (cur_.kind == TokenKind::Symbol && cur_.text == "-") {
          Token dash = shift();
          Token type = expect(TokenKind::Symbol);
          if (pending.empty())
            throw ParseError(dash.span, "'-' with no variables before it");
          for (auto &v : pending)
            pred.params.push_back(model::Parameter{v, type.text});
          pending.clear();
        } else {
          break;
        }
      }
      for (auto &v : pending)
        pred.params.push_back(model::Parameter{v, "object"});
      expect(TokenKind::RParen);
      domain.predicates.push_back(std::move(pred));
    }
    expect(TokenKind::RParen);
  }

  model::Atom parse_lifted_atom() {
    expect(TokenKind::LParen);
    model::Atom atom;
    atom.predicate = expect(TokenKind::Symbol).text;
    while (cur_.kind == TokenKind::Variable || cur_.kind == TokenKind::Symbol) {
      Token t = shift();
      atom.args.push_back(t.kind == TokenKind::Variable
                              ? model::variable(t.text)
                              : model::constant(t.text));
    }
    expect(TokenKind::RParen);
    return atom;
  }

  // literal | (and literal*) where literal := atom | (not atom)
  std::vector<model::Literal> parse_condition() {
    std::vector<model::Literal> lits;
    Token open = expect(TokenKind::LParen);
    if (cur_.kind == TokenKind::Symbol && cur_.text == "and") {
      shift();
      while (cur_.kind == TokenKind::LParen) lits.push_back(parse_literal_body());
      expect(TokenKind::RParen);
    } else if (cur_.kind == TokenKind::Symbol && cur_.text == "not") {
      shift();
      model::Atom atom = parse_lifted_atom();
      expect(TokenKind::RParen);
      lits.push_back(model::Literal{std::move(atom), true});
    } else if (cur_.kind == TokenKind::Symbol) {
      model::Atom atom;
      atom.predicate = shift().text;
      while (cur_.kind == TokenKind::Variable || cur_.kind == TokenKind::Symbol) {
        Token t = shift();
        atom.args.push_back(t.kind == TokenKind::Variable
                                ? model::variable(t.text)
                                : model::constant(t.text));
      }
      expect(TokenKind::RParen);
      lits.push_back(model::Literal{std::move(atom), false});
    } else if (cur_.kind == TokenKind::RParen) {
      shift(); // () and (and) are the empty condition
    } else {
      throw ParseError(open.span, "malformed condition");
    }
    return lits;
  }
  model::Literal parse_literal_body() {
    expect(TokenKind::LParen);
    if (cur_.kind == TokenKind::Symbol && cur_.text == "not") {
      shift();
      model::Atom atom = parse_lifted_atom();
      expect(TokenKind::RParen);
      return model::Literal{std::move(atom), true};
    }
    model::Atom atom;
    atom.predicate = expect(TokenKind::Symbol).text;
    while (cur_.kind == TokenKind::Variable || cur_.kind == TokenKind::Symbol) {
      Token t = shift();
      atom.args.push_back(t.kind == TokenKind::Variable
                              ? model::variable(t.text)
                              : model::constant(t.text));
    }
    expect(TokenKind::RParen);
    return model::Literal{std::move(atom), false};
  }

  void parse_action(model::Domain &domain) {
    model::ActionSchema schema;
    schema.name = expect(TokenKind::Symbol).text;
    while (cur_.kind == TokenKind::Keyword) {
      Token key = shift();
      if (key.text == "parameters") {
        expect(TokenKind::LParen);
        schema.params = parse_parameter_list();
      } else if (key.text == "precondition") {
        schema.preconditions = parse_condition();
      } else if (key.text == "effect") {
        for (auto &lit : parse_condition()) {
          if (lit.negated)
            schema.delete_effects.push_back(std::move(lit.atom));
          else
            schema.add_effects.push_back(std::move(lit.atom));
        }
      } else {
        throw ParseError(key.span, "unsupported action field :" + key.text);
      }
    }
    expect(TokenKind::RParen);
    domain.actions.push_back(std::move(schema));
  }

  model::GroundLiteral parse_ground_literal(const model::Domain &domain) {
    expect(TokenKind::LParen);
    bool negated = false;
    if (cur_.kind == TokenKind::Symbol && cur_.text == "not") {
      shift();
      expect(TokenKind::LParen);
      negated = true;
    }
    Token name = expect(TokenKind::Symbol);
    if (domain.find_predicate(name.text) == nullptr)
      throw ParseError(name.span, "undeclared predicate '" + name.text + "'");
    model::GroundAtom atom{name.text, {}};
    while (cur_.kind == TokenKind::Symbol) atom.args.push_back(shift().text);
    expect(TokenKind::RParen);
    if (negated) expect(TokenKind::RParen);
    return model::GroundLiteral{std::move(atom), negated};
  }

  void parse_goal(const model::Domain &domain, model::Problem &problem) {
    expect(TokenKind::LParen);
    if (cur_.kind == TokenKind::Symbol && cur_.text == "and") {
      shift();
      while (cur_.kind == TokenKind::LParen)
        problem.goal.push_back(parse_ground_literal(domain));
      expect(TokenKind::RParen);
    } else if (cur_.kind == TokenKind::Symbol && cur_.text == "not") {
      shift();
      expect(TokenKind::LParen);
      Token name = expect(TokenKind::Symbol);
      if (domain.find_predicate(name.text) == nullptr)
        throw ParseError(name.span, "undeclared predicate '" + name.text + "'");
      model::GroundAtom atom{name.text, {}};
      while (cur_.kind == TokenKind::Symbol) atom.args.push_back(shift().text);
      expect(TokenKind::RParen);
      expect(TokenKind::RParen);
      problem.goal.push_back(model::GroundLiteral{std::move(atom), true});
    } else if (cur_.kind == TokenKind::Symbol) {
      Token name = shift();
      if (domain.find_predicate(name.text) == nullptr)
        throw ParseError(name.span, "undeclared predicate '" + name.text + "'");
      model::GroundAtom atom{name.text, {}};
      while (cur_.kind == TokenKind::Symbol) atom.args.push_back(shift().text);
      expect(TokenKind::RParen);
      problem.goal.push_back(model::GroundLiteral{std::move(atom), false});
    } else if (cur_.kind == TokenKind::RParen) {
      shift(); // empty goal, trivially satisfied
    } else {
      throw ParseError(cur_.span, "malformed goal");
    }
  }

  Lexer lexer_;
  Token cur_{TokenKind::End, "", {}};
};

} // namespace internal

inline model::Domain parse_domain(std::string_view text,
                                  const std::string &file = "") {
  internal::Parser parser(text, file);
  return parser.parse_domain();
}

inline model::Problem parse_problem(std::string_view text,
                                    const model::Domain &domain,
                                    const std::string &file = "") {
  internal::Parser parser(text, file);
  return parser.parse_problem(domain);
}

inline model::ActionSchema parse_action_schema(std::string_view text,
                                               const std::string &file = "") {
  internal::Parser parser(text, file);
  return parser.parse_action_fragment();
}

// --- canonical printers (round-trip stable) ---

namespace internal {

inline void print_term(std::ostringstream &os, const model::Term &t) {
  if (t.is_variable) os << '?';
  os << t.name;
}

inline void print_lifted_atom(std::ostringstream &os, const model::Atom &a) {
  os << '(' << a.predicate;
  for (const auto &t : a.args) {
    os << ' ';
    print_term(os, t);
  }
  os << ')';
}

inline void print_lifted_literal(std::ostringstream &os,
                                 const model::Literal &l) {
  if (l.negated) {
    os << "(not ";
    print_lifted_atom(os, l.atom);
    os << ')';
  } else {
    print_lifted_atom(os, l.atom);
  }
}

inline void print_ground_atom_sexp(std::ostringstream &os,
                                   const model::GroundAtom &a) {
  os << '(' << a.predicate;
  for (const auto &arg : a.args) os << ' ' << arg;
  os << ')';
}

} // namespace internal

inline std::string print_domain(const model::Domain &domain) {
  std::ostringstream os;
  os << "(define (domain " << domain.name << ")\n";
  if (!domain.requirements.empty()) {
    os << "  (:requirements";
    for (const auto &r : domain.requirements) os << " :" << r;
    os << ")\n";
  }
  if (!domain.types.empty()) {
    os << "  (:types";
    for (const auto &t : domain.types) {
      os << ' ' << t.name;
      if (!t.parent.empty() && t.parent != "object") os << " - " << t.parent;
    }
    os << ")\n";
  }
  if (!domain.constants.empty()) {
    os << "  (:constants";
    for (const auto &c : domain.constants) os << ' ' << c.name << " - " << c.type;
    os << ")\n";
  }
  os << "  (:predicates";
  if (domain.predicates.empty()) os << ')';
  os << "\n";
  for (size_t i = 0; i < domain.predicates.size(); ++i) {
    const auto &p = domain.predicates[i];
    os << "    (" << p.name;
    for (const auto &param : p.params)
      os << " ?" << param.name << " - " << param.type;
    os << ')' << (i + 1 == domain.predicates.size() ? ")\n" : "\n");
  }
  for (const auto &a : domain.actions) {
    os << "  (:action " << a.name << "\n    :parameters (";
    for (size_t i = 0; i < a.params.size(); ++i) {
      if (i) os << ' ';
      os << '?' << a.params[i].name << " - " << a.params[i].type;
    }
    os << ")\n    :precondition (and";
    for (const auto &lit : a.preconditions) {
      os << ' ';
      internal::print_lifted_literal(os, lit);
    }
    os << ")\n    :effect (and";
    for (const auto &atom : a.add_effects) {
      os << ' ';
      internal::print_lifted_atom(os, atom);
    }
    for (const auto &atom : a.delete_effects) {
      os << " (not ";
      internal::print_lifted_atom(os, atom);
      os << ')';
    }
    os << "))\n";
  }
  os << ")\n";
  return os.str();
}

inline std::string print_action_schema(const model::ActionSchema &a) {
  std::ostringstream os;
  os << "(:action " << a.name << " :parameters (";
  for (size_t i = 0; i < a.params.size(); ++i) {
    if (i) os << ' ';
    os << '?' << a.params[i].name << " - " << a.params[i].type;
  }
  os << ") :precondition (and";
  for (const auto &lit : a.preconditions) {
    os << ' ';
    internal::print_lifted_literal(os, lit);
  }
  os << ") :effect (and";
  for (const auto &atom : a.add_effects) {
    os << ' ';
    internal::print_lifted_atom(os, atom);
  }
  for (const auto &atom : a.delete_effects) {
    os << " (not ";
    internal::print_lifted_atom(os, atom);
    os << ')';
  }
  os << "))";
  return os.str();
}

inline std::string print_problem(const model::Problem &problem) {
  std::ostringstream os;
  os << "(define (problem " << problem.name << ")\n";
  os << "  (:domain " << problem.domain_name << ")\n";
  if (!problem.objects.empty()) {
    os << "  (:objects";
    for (const auto &o : problem.objects) os << ' ' << o.name << " - " << o.type;
    os << ")\n";
  }
  os << "  (:init";
  for (const auto &atom : problem.init) {
    os << ' ';
    internal::print_ground_atom_sexp(os, atom);
  }
  os << ")\n";
  os << "  (:goal (and";
  for (const auto &lit : problem.goal) {
    os << ' ';
    if (lit.negated) {
      os << "(not ";
      internal::print_ground_atom_sexp(os, lit.atom);
      os << ')';
    } else {
      internal::print_ground_atom_sexp(os, lit.atom);
    }
  }
  os << "))\n)\n";
  return os.str();
}

// --- soft-goal sidecar ---
// { "soft_goals": [ { "atom": "fridge-closed(fridge)", "penalty": 2 } ] }

inline std::vector<model::SoftGoal> parse_soft_goals(const std::string &text,
                                                     const std::string &file = "") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(SourceSpan{file, 1, 1, 1},
                     std::string("bad soft-goal document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("soft_goals") ||
      !doc["soft_goals"].is_array())
    throw ParseError(SourceSpan{file, 1, 1, 1},
                     "soft-goal document needs an array-valued \"soft_goals\" key");
  std::vector<model::SoftGoal> out;
  for (const auto &entry : doc["soft_goals"]) {
    if (!entry.is_object() || !entry.contains("atom") ||
        !entry.contains("penalty"))
      throw ParseError(SourceSpan{file, 1, 1, 1},
                       "each soft goal needs \"atom\" and \"penalty\"");
    auto parsed = planner::detail::parse_atom_text(entry["atom"].get<std::string>());
    int penalty = entry["penalty"].get<int>();
    if (penalty < 0)
      throw ParseError(SourceSpan{file, 1, 1, 1},
                       "negative penalty for " + parsed.name);
    out.push_back(model::SoftGoal{
        model::GroundAtom{parsed.name, parsed.args}, penalty});
  }
  return out;
}

inline std::string print_soft_goals(const std::vector<model::SoftGoal> &goals) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &g : goals)
    arr.push_back({{"atom", g.atom.text()}, {"penalty", g.penalty}});
  return nlohmann::json{{"soft_goals", arr}}.dump(2) + "\n";
}

// --- plan files: one name(arg,...) per line, ';' comments ---

inline model::Plan parse_plan(const std::string &text,
                              const std::string &file = "") {
  model::Plan plan;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t comment = line.find(';');
    if (comment != std::string::npos) line = line.substr(0, comment);
    std::string body = planner::detail::trim(line);
    if (body.empty()) continue;
    try {
      plan.steps.push_back(model::ActionCall::parse(body));
    } catch (const std::invalid_argument &e) {
      throw ParseError(SourceSpan{file, lineno, 1,
                                  static_cast<int>(body.size())},
                       e.what());
    }
  }
  return plan;
}

} // namespace planner::pddl

#endif
