#ifndef PLANNER_DETAIL_TEXT_HPP
#define PLANNER_DETAIL_TEXT_HPP

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace planner::detail {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct ParsedAtomText {
  std::string name;
  std::vector<std::string> args;
};

// Parses the compact atom syntax used by sidecars, fix documents, fixture
// plans and .plan files: name(arg,...), name() or a bare name. Whitespace
// around tokens is tolerated, identifiers are lower-cased.
inline ParsedAtomText parse_atom_text(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) {
    throw std::invalid_argument("empty atom text");
  }
  ParsedAtomText out;
  size_t open = s.find('(');
  if (open == std::string::npos) {
    out.name = to_lower(s);
    return out;
  }
  if (s.back() != ')') {
    throw std::invalid_argument("atom text missing ')': " + s);
  }
  out.name = to_lower(trim(s.substr(0, open)));
  if (out.name.empty()) {
    throw std::invalid_argument("atom text missing name: " + s);
  }
  std::string inner = s.substr(open + 1, s.size() - open - 2);
  std::string cur;
  bool any = false;
  for (char c : inner) {
    if (c == ',') {
      std::string arg = trim(cur);
      if (arg.empty()) {
        throw std::invalid_argument("empty argument in atom text: " + s);
      }
      out.args.push_back(to_lower(arg));
      cur.clear();
      any = true;
    } else {
      cur.push_back(c);
    }
  }
  std::string last = trim(cur);
  if (!last.empty()) {
    out.args.push_back(to_lower(last));
  } else if (any) {
    throw std::invalid_argument("trailing comma in atom text: " + s);
  }
  return out;
}

inline std::string format_atom_text(const std::string &name,
                                    const std::vector<std::string> &args) {
  std::string out = name;
  out.push_back('(');
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out.push_back(',');
    out += args[i];
  }
  out.push_back(')');
  return out;
}

} // namespace planner::detail

#endif
