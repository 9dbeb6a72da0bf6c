#include "bimatch/model_file.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "bimatch/errors.hpp"

namespace bimatch {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(const std::string& file, int line, const std::string& field,
                             const std::string& msg) {
  throw ModelParseError(file + ":" + std::to_string(line) + ": " + field + ": " + msg,
                        file, line, field);
}

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t p = 0;
  while (p < s.size()) {
    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
    std::size_t q = p;
    while (q < s.size() && !std::isspace(static_cast<unsigned char>(s[q]))) ++q;
    if (q > p) out.emplace_back(s.substr(p, q - p));
    p = q;
  }
  return out;
}

bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

// Linear polynomial in one symbolic parameter, plus the name of that
// parameter when it actually occurs.
struct Poly {
  double constant = 0.0;
  double slope = 0.0;
  std::string ident;  // empty when no parameter occurs
};

// Recursive-descent parser for +-*/() expressions over numbers and at most
// one identifier, restricted to results linear in the identifier.
class ExprParser {
 public:
  ExprParser(std::string_view text, const std::string& file, int line,
             const std::string& field)
      : text_(text), file_(file), line_(line), field_(field) {}

  Poly parse() {
    Poly p = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    parse_fail(file_, line_, field_, msg + " in expression '" + std::string(text_) + "'");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool eat(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void merge_ident(Poly& into, const Poly& from) {
    if (from.ident.empty()) return;
    if (into.ident.empty()) {
      into.ident = from.ident;
    } else if (into.ident != from.ident) {
      fail("more than one parameter name used");
    }
  }

  Poly expr() {
    Poly acc = term();
    for (;;) {
      if (eat('+')) {
        Poly t = term();
        acc.constant += t.constant;
        acc.slope += t.slope;
        merge_ident(acc, t);
      } else if (eat('-')) {
        Poly t = term();
        acc.constant -= t.constant;
        acc.slope -= t.slope;
        merge_ident(acc, t);
      } else {
        return acc;
      }
    }
  }

  Poly term() {
    Poly acc = factor();
    for (;;) {
      if (eat('*')) {
        Poly t = factor();
        if (acc.slope != 0.0 && t.slope != 0.0) {
          fail("nonlinear term (parameter times parameter)");
        }
        Poly r;
        r.constant = acc.constant * t.constant;
        r.slope = acc.constant * t.slope + acc.slope * t.constant;
        r.ident = acc.ident;
        merge_ident(r, t);
        acc = r;
      } else if (eat('/')) {
        Poly t = factor();
        if (t.slope != 0.0) fail("division by the parameter is not linear");
        if (t.constant == 0.0) fail("division by zero");
        acc.constant /= t.constant;
        acc.slope /= t.constant;
        merge_ident(acc, t);
      } else {
        return acc;
      }
    }
  }

  Poly factor() {
    skip_space();
    if (eat('(')) {
      Poly p = expr();
      if (!eat(')')) fail("missing ')'");
      return p;
    }
    if (eat('-')) {
      Poly p = factor();
      p.constant = -p.constant;
      p.slope = -p.slope;
      return p;
    }
    if (eat('+')) return factor();
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      Poly p;
      p.constant = v;
      return p;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t q = pos_;
      while (q < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[q])) ||
                                  text_[q] == '_')) {
        ++q;
      }
      Poly p;
      p.ident = std::string(text_.substr(pos_, q - pos_));
      p.slope = 1.0;
      pos_ = q;
      return p;
    }
    fail("expected number, parameter, or '('");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  const std::string& file_;
  int line_;
  const std::string& field_;
};

std::string canonical_expr(const LinearExpr& e, const std::string& param) {
  if (e.slope == 0.0) return fmt17(e.constant);
  if (e.constant == 0.0) return fmt17(e.slope) + "*" + param;
  if (e.slope < 0.0) return fmt17(e.constant) + " - " + fmt17(-e.slope) + "*" + param;
  return fmt17(e.constant) + " + " + fmt17(e.slope) + "*" + param;
}

}  // namespace

ModelSpec ModelSpec::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) parse_fail(path, 0, "file", "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

ModelSpec ModelSpec::parse_string(std::string_view text, const std::string& name) {
  ModelSpec spec;
  std::unordered_map<std::string, std::uint32_t> customer_index, server_index;
  // Expression slots in declaration side order; filled as lambda/mu lines
  // arrive.  The bool marks "assigned".
  std::vector<std::pair<LinearExpr, bool>> lambda_slots, mu_slots;
  std::vector<std::string> expr_idents;
  bool saw_customers = false, saw_servers = false;

  auto declare_names = [&](const std::vector<std::string>& tokens, int line,
                           const std::string& field, std::vector<std::string>& names,
                           std::unordered_map<std::string, std::uint32_t>& index) {
    if (tokens.size() < 2) parse_fail(name, line, field, "expected at least one class name");
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string& n = tokens[t];
      if (n.find_first_of(",{}") != std::string::npos) {
        parse_fail(name, line, field, "class name '" + n + "' contains , { or }");
      }
      if (index.count(n) != 0) {
        parse_fail(name, line, field, "duplicate class name '" + n + "'");
      }
      index.emplace(n, static_cast<std::uint32_t>(names.size()));
      names.push_back(n);
    }
  };

  int line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;

    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::vector<std::string> tokens = split_tokens(raw);
    if (tokens.empty()) continue;
    const std::string& keyword = tokens[0];

    if (keyword == "customers") {
      if (saw_customers) parse_fail(name, line_no, keyword, "declared twice");
      saw_customers = true;
      declare_names(tokens, line_no, keyword, spec.customer_names_, customer_index);
      lambda_slots.assign(spec.customer_names_.size(), {LinearExpr{}, false});
    } else if (keyword == "servers") {
      if (saw_servers) parse_fail(name, line_no, keyword, "declared twice");
      saw_servers = true;
      declare_names(tokens, line_no, keyword, spec.server_names_, server_index);
      mu_slots.assign(spec.server_names_.size(), {LinearExpr{}, false});
    } else if (keyword == "edge") {
      if (tokens.size() != 3) {
        parse_fail(name, line_no, keyword, "expected: edge <customer> <server>");
      }
      auto ci = customer_index.find(tokens[1]);
      if (ci == customer_index.end()) {
        parse_fail(name, line_no, keyword, "unknown customer class '" + tokens[1] + "'");
      }
      auto si = server_index.find(tokens[2]);
      if (si == server_index.end()) {
        parse_fail(name, line_no, keyword, "unknown server class '" + tokens[2] + "'");
      }
      spec.edges_.emplace_back(ci->second, si->second);
    } else if (keyword == "lambda" || keyword == "mu") {
      if (tokens.size() < 3) {
        parse_fail(name, line_no, keyword,
                   "expected: " + keyword + " <class> <expression>");
      }
      const bool is_lambda = keyword == "lambda";
      auto& index = is_lambda ? customer_index : server_index;
      auto it = index.find(tokens[1]);
      if (it == index.end()) {
        parse_fail(name, line_no, keyword, "unknown class '" + tokens[1] + "'");
      }
      // The expression is everything after the class name, spaces included.
      const std::size_t name_pos = raw.find(tokens[1], raw.find(keyword) + keyword.size());
      std::string_view expr_text = raw.substr(name_pos + tokens[1].size());
      Poly p = ExprParser(expr_text, name, line_no, keyword).parse();
      if (!p.ident.empty()) expr_idents.push_back(p.ident);
      auto& slots = is_lambda ? lambda_slots : mu_slots;
      auto& slot = slots[it->second];
      if (slot.second) {
        parse_fail(name, line_no, keyword,
                   "probability for class '" + tokens[1] + "' assigned twice");
      }
      slot = {LinearExpr{p.constant, p.slope}, true};
    } else if (keyword == "sweep") {
      if (spec.sweep_) parse_fail(name, line_no, keyword, "declared twice");
      if (tokens.size() < 3) {
        parse_fail(name, line_no, keyword,
                   "expected: sweep <parameter> <from:to:step | values...>");
      }
      if (!valid_identifier(tokens[1])) {
        parse_fail(name, line_no, keyword, "bad parameter name '" + tokens[1] + "'");
      }
      SweepSpec sw;
      sw.parameter = tokens[1];
      if (tokens.size() == 3 && tokens[2].find(':') != std::string::npos) {
        const std::string& r = tokens[2];
        const std::size_t c1 = r.find(':');
        const std::size_t c2 = r.find(':', c1 + 1);
        if (c2 == std::string::npos || r.find(':', c2 + 1) != std::string::npos) {
          parse_fail(name, line_no, keyword, "range must be from:to:step");
        }
        char* e = nullptr;
        const std::string fs = r.substr(0, c1), ts = r.substr(c1 + 1, c2 - c1 - 1),
                          ss = r.substr(c2 + 1);
        const double from = std::strtod(fs.c_str(), &e);
        if (e != fs.c_str() + fs.size()) parse_fail(name, line_no, keyword, "bad range start");
        const double to = std::strtod(ts.c_str(), &e);
        if (e != ts.c_str() + ts.size()) parse_fail(name, line_no, keyword, "bad range end");
        const double step = std::strtod(ss.c_str(), &e);
        if (e != ss.c_str() + ss.size()) parse_fail(name, line_no, keyword, "bad range step");
        if (!(step > 0.0)) parse_fail(name, line_no, keyword, "range step must be > 0");
        if (to < from) parse_fail(name, line_no, keyword, "range end before start");
        const auto count =
            static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
        for (std::size_t n = 0; n < count; ++n) {
          sw.grid.push_back(from + static_cast<double>(n) * step);
        }
      } else {
        for (std::size_t t = 2; t < tokens.size(); ++t) {
          char* e = nullptr;
          const double v = std::strtod(tokens[t].c_str(), &e);
          if (e != tokens[t].c_str() + tokens[t].size() || !std::isfinite(v)) {
            parse_fail(name, line_no, keyword, "bad grid value '" + tokens[t] + "'");
          }
          sw.grid.push_back(v);
        }
      }
      spec.sweep_ = std::move(sw);
    } else {
      parse_fail(name, line_no, keyword, "unknown keyword");
    }
  }

  if (!saw_customers) parse_fail(name, line_no, "customers", "section missing");
  if (!saw_servers) parse_fail(name, line_no, "servers", "section missing");
  for (std::size_t i = 0; i < lambda_slots.size(); ++i) {
    if (!lambda_slots[i].second) {
      parse_fail(name, line_no, "lambda",
                 "no arrival probability for customer class '" +
                     spec.customer_names_[i] + "'");
    }
    spec.lambda_.push_back(lambda_slots[i].first);
  }
  for (std::size_t k = 0; k < mu_slots.size(); ++k) {
    if (!mu_slots[k].second) {
      parse_fail(name, line_no, "mu",
                 "no arrival probability for server class '" + spec.server_names_[k] + "'");
    }
    spec.mu_.push_back(mu_slots[k].first);
  }
  for (const std::string& ident : expr_idents) {
    if (!spec.sweep_) {
      parse_fail(name, line_no, "sweep",
                 "expression uses parameter '" + ident + "' but no sweep is declared");
    }
    if (ident != spec.sweep_->parameter) {
      parse_fail(name, line_no, "sweep",
                 "expression parameter '" + ident + "' does not match sweep parameter '" +
                     spec.sweep_->parameter + "'");
    }
  }
  if (spec.sweep_ && spec.sweep_->grid.empty()) {
    parse_fail(name, line_no, "sweep", "empty grid");
  }

  // Canonical edge order; duplicates collapse.
  std::sort(spec.edges_.begin(), spec.edges_.end());
  spec.edges_.erase(std::unique(spec.edges_.begin(), spec.edges_.end()),
                    spec.edges_.end());
  return spec;
}

bool ModelSpec::needs_parameter() const {
  for (const LinearExpr& e : lambda_) {
    if (e.depends_on_parameter()) return true;
  }
  for (const LinearExpr& e : mu_) {
    if (e.depends_on_parameter()) return true;
  }
  return false;
}

std::pair<CompatibilityGraph, ArrivalModel> ModelSpec::instantiate() const {
  if (needs_parameter()) {
    throw ModelError("model depends on sweep parameter '" + sweep_->parameter +
                     "'; a parameter value is required");
  }
  std::vector<double> lam, mu;
  for (const LinearExpr& e : lambda_) lam.push_back(e.constant);
  for (const LinearExpr& e : mu_) mu.push_back(e.constant);
  return {CompatibilityGraph(static_cast<std::uint32_t>(customer_names_.size()),
                             static_cast<std::uint32_t>(server_names_.size()), edges_),
          ArrivalModel(std::move(lam), std::move(mu))};
}

std::pair<CompatibilityGraph, ArrivalModel> ModelSpec::instantiate(
    double parameter_value) const {
  std::vector<double> lam, mu;
  for (const LinearExpr& e : lambda_) lam.push_back(e.eval(parameter_value));
  for (const LinearExpr& e : mu_) mu.push_back(e.eval(parameter_value));
  return {CompatibilityGraph(static_cast<std::uint32_t>(customer_names_.size()),
                             static_cast<std::uint32_t>(server_names_.size()), edges_),
          ArrivalModel(std::move(lam), std::move(mu))};
}

std::string ModelSpec::canonical_text() const {
  std::string out = "customers";
  for (const std::string& n : customer_names_) out += ' ' + n;
  out += "\nservers";
  for (const std::string& n : server_names_) out += ' ' + n;
  out += '\n';
  for (const auto& [i, k] : edges_) {
    out += "edge " + customer_names_[i] + ' ' + server_names_[k] + '\n';
  }
  const std::string param = sweep_ ? sweep_->parameter : "t";
  for (std::size_t i = 0; i < lambda_.size(); ++i) {
    out += "lambda " + customer_names_[i] + ' ' + canonical_expr(lambda_[i], param) + '\n';
  }
  for (std::size_t k = 0; k < mu_.size(); ++k) {
    out += "mu " + server_names_[k] + ' ' + canonical_expr(mu_[k], param) + '\n';
  }
  if (sweep_) {
    out += "sweep " + sweep_->parameter;
    for (double v : sweep_->grid) out += ' ' + fmt17(v);
    out += '\n';
  }
  return out;
}

}  // namespace bimatch
