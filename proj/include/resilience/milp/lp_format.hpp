// Copyright 2026 The Resilience Planner Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CPLEX LP text format: writer, a reader for the subset the writer emits
// (plus the common variants other tools produce), and a file-interchange
// bridge to an external solver executable.

#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "resilience/milp/problem.hpp"

namespace resilience::milp {

namespace detail {

inline std::string fmt_num(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// LP names may not start with a digit or '.'; characters outside a
// conservative alphabet become '_'.
inline std::string lp_name(const std::string& name, char prefix, int index) {
  if (name.empty()) return std::string(1, prefix) + std::to_string(index);
  std::string out;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    c == '.' || c == '[' || c == ']' || c == '(' || c == ')' ||
                    c == '#' || c == '@' || c == '~' || c == '!';
    out += ok ? c : '_';
  }
  if (std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.') {
    out = std::string(1, prefix) + "_" + out;
  }
  return out;
}

inline void write_terms(std::ostream& os, const std::vector<std::pair<double, std::string>>& terms) {
  int on_line = 0;
  bool first = true;
  for (const auto& [c, name] : terms) {
    if (on_line == 8) {
      os << "\n   ";
      on_line = 0;
    }
    if (c < 0) os << (first ? "-" : " - ") << fmt_num(-c) << ' ' << name;
    else os << (first ? "" : " + ") << fmt_num(c) << ' ' << name;
    first = false;
    ++on_line;
  }
}

}  // namespace detail

inline void write_lp(const MilpProblem& p, std::ostream& os) {
  std::vector<std::string> names(p.num_vars());
  for (int j = 0; j < p.num_vars(); ++j) names[j] = detail::lp_name(p.var(j).name, 'x', j);

  os << "\\ written by resilience::milp::write_lp\n";
  os << (p.objective_sense() == ObjSense::kMaximize ? "Maximize\n" : "Minimize\n");
  os << " obj: ";
  std::vector<std::pair<double, std::string>> terms;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.objective()[j] != 0.0) terms.emplace_back(p.objective()[j], names[j]);
  }
  detail::write_terms(os, terms);
  if (p.objective_offset() != 0.0) {
    const double c = p.objective_offset();
    os << (terms.empty() ? (c < 0 ? "- " : "") : (c < 0 ? " - " : " + "))
       << detail::fmt_num(std::abs(c));
  }
  os << "\nSubject To\n";
  for (int i = 0; i < p.num_rows(); ++i) {
    const Constraint& c = p.row(i);
    os << ' ' << detail::lp_name(c.name, 'c', i) << ": ";
    terms.clear();
    for (const Term& t : c.terms) terms.emplace_back(t.coef, names[t.var]);
    if (terms.empty()) terms.emplace_back(0.0, names.empty() ? "x0" : names[0]);
    detail::write_terms(os, terms);
    switch (c.sense) {
      case RowSense::kLessEqual: os << " <= "; break;
      case RowSense::kGreaterEqual: os << " >= "; break;
      case RowSense::kEqual: os << " = "; break;
    }
    os << detail::fmt_num(c.rhs) << '\n';
  }
  // Every variable is listed so the reader recovers declaration order.
  os << "Bounds\n";
  for (int j = 0; j < p.num_vars(); ++j) {
    const Variable& v = p.var(j);
    if (v.lb == -kInf && v.ub == kInf) {
      os << ' ' << names[j] << " free\n";
    } else {
      os << ' ' << detail::fmt_num(v.lb) << " <= " << names[j] << " <= "
         << detail::fmt_num(v.ub) << '\n';
    }
  }
  bool any = false;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.var(j).kind != VarKind::kInteger) continue;
    if (!any) os << "Generals\n";
    any = true;
    os << ' ' << names[j] << '\n';
  }
  any = false;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.var(j).kind != VarKind::kBinary) continue;
    if (!any) os << "Binaries\n";
    any = true;
    os << ' ' << names[j] << '\n';
  }
  os << "End\n";
}

inline std::string to_lp_string(const MilpProblem& p) {
  std::ostringstream os;
  write_lp(p, os);
  return os.str();
}

inline void write_lp_file(const MilpProblem& p, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_lp(p, f);
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

namespace detail {

class LpTokenizer {
 public:
  explicit LpTokenizer(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
      const auto cut = line.find('\\');
      if (cut != std::string::npos) line.resize(cut);
      split(line);
    }
  }
  const std::vector<std::string>& tokens() const { return tok_; }

 private:
  void split(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size()) {
      const char c = line[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '<' || c == '>' || c == '=') {
        std::string op(1, c);
        if (i + 1 < line.size() && (line[i + 1] == '=' || line[i + 1] == '<' || line[i + 1] == '>')) {
          op += line[i + 1];
          ++i;
        }
        ++i;
        if (op == "=<") op = "<=";
        if (op == "=>") op = ">=";
        if (op == "<") op = "<=";
        if (op == ">") op = ">=";
        tok_.push_back(op);
      } else if (c == '+' || c == '-' || c == ':') {
        tok_.emplace_back(1, c);
        ++i;
      } else {
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
               line[j] != '<' && line[j] != '>' && line[j] != '=' && line[j] != ':' &&
               !((line[j] == '+' || line[j] == '-') && j > i &&
                 line[j - 1] != 'e' && line[j - 1] != 'E')) {
          ++j;
        }
        tok_.push_back(line.substr(i, j - i));
        i = j;
      }
    }
  }
  std::vector<std::string> tok_;
};

inline bool is_number(const std::string& s, double* v) {
  std::string t = s;
  for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "inf" || t == "infinity") {
    *v = kInf;
    return true;
  }
  if (s.empty() || !(std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.')) return false;
  char* end = nullptr;
  *v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace detail

// Reads an LP file.  Variable order follows the Bounds section when a
// variable is listed there, otherwise first appearance.
inline MilpProblem read_lp(std::istream& is) {
  detail::LpTokenizer tz(is);
  const auto& tk = tz.tokens();
  enum Section { kNone, kObj, kRows, kBounds, kGenerals, kBinaries, kEnd };
  Section sec = kNone;
  ObjSense sense = ObjSense::kMinimize;

  std::vector<std::string> order;
  std::map<std::string, int> seen;
  auto touch = [&](const std::string& n) {
    if (!seen.count(n)) {
      seen[n] = static_cast<int>(order.size());
      order.push_back(n);
    }
  };
  struct RawRow {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    RowSense sense;
    double rhs;
  };
  std::vector<std::pair<std::string, double>> obj;
  double offset = 0.0;
  std::vector<RawRow> rows;
  std::map<std::string, std::pair<double, double>> bounds;
  std::vector<std::string> bound_order;
  std::map<std::string, VarKind> kinds;

  std::size_t i = 0;
  auto section_of = [&](std::size_t k, Section* s, std::size_t* used) {
    const std::string t = detail::lower(tk[k]);
    *used = 1;
    if (t == "minimize" || t == "minimum" || t == "min") { sense = ObjSense::kMinimize; *s = kObj; return true; }
    if (t == "maximize" || t == "maximum" || t == "max") { sense = ObjSense::kMaximize; *s = kObj; return true; }
    if ((t == "subject" || t == "such") && k + 1 < tk.size() && detail::lower(tk[k + 1]) == "to") {
      *used = 2; *s = kRows; return true;
    }
    if (t == "st" || t == "s.t." || t == "st.") { *s = kRows; return true; }
    if (t == "bounds" || t == "bound") { *s = kBounds; return true; }
    if (t == "generals" || t == "general" || t == "gen" || t == "integers") { *s = kGenerals; return true; }
    if (t == "binaries" || t == "binary" || t == "bin") { *s = kBinaries; return true; }
    if (t == "end") { *s = kEnd; return true; }
    return false;
  };

  // Parses "[name:] expr" until a relational operator or section keyword.
  auto parse_expr = [&](std::vector<std::pair<std::string, double>>* terms,
                        double* constant) {
    double sgn = 1.0;
    double coef = 1.0;
    bool have_coef = false;
    while (i < tk.size()) {
      Section s;
      std::size_t used;
      const std::string& t = tk[i];
      if (t == "<=" || t == ">=" || t == "=" || section_of(i, &s, &used)) break;
      // A new row label "name :" ends the expression.
      if (i + 1 < tk.size() && tk[i + 1] == ":") break;
      if (t == "+") { ++i; continue; }
      if (t == "-") { sgn = -sgn; ++i; continue; }
      double v;
      if (detail::is_number(t, &v)) {
        coef = v;
        have_coef = true;
        ++i;
        if (i >= tk.size() || tk[i] == "+" || tk[i] == "-" || tk[i] == "<=" ||
            tk[i] == ">=" || tk[i] == "=" || section_of(i, &s, &used) ||
            (i + 1 < tk.size() && tk[i + 1] == ":")) {
          if (constant) *constant += sgn * coef;
          sgn = 1.0;
          coef = 1.0;
          have_coef = false;
        }
        continue;
      }
      std::string name = t;
      if (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '.') {
        // Coefficient glued to the name, e.g. "2b".
        char* end = nullptr;
        const double c = std::strtod(t.c_str(), &end);
        name = std::string(end);
        coef = (have_coef ? coef : 1.0) * c;
        have_coef = true;
      }
      touch(name);
      terms->emplace_back(name, sgn * (have_coef ? coef : 1.0));
      sgn = 1.0;
      coef = 1.0;
      have_coef = false;
      ++i;
    }
  };

  while (i < tk.size() && sec != kEnd) {
    Section s;
    std::size_t used;
    if (section_of(i, &s, &used)) {
      sec = s;
      i += used;
      continue;
    }
    switch (sec) {
      case kObj: {
        if (i + 1 < tk.size() && tk[i + 1] == ":") i += 2;
        parse_expr(&obj, &offset);
        break;
      }
      case kRows: {
        RawRow r;
        if (i + 1 < tk.size() && tk[i + 1] == ":") {
          r.name = tk[i];
          i += 2;
        } else {
          r.name = "R" + std::to_string(rows.size());
        }
        double lhs_const = 0.0;
        parse_expr(&r.terms, &lhs_const);
        if (i >= tk.size()) throw std::runtime_error("LP parse: row '" + r.name + "' lacks a sense");
        const std::string op = tk[i++];
        r.sense = op == "<=" ? RowSense::kLessEqual
                  : op == ">=" ? RowSense::kGreaterEqual
                               : RowSense::kEqual;
        double sgn = 1.0;
        while (i < tk.size() && (tk[i] == "-" || tk[i] == "+")) {
          if (tk[i] == "-") sgn = -sgn;
          ++i;
        }
        double v;
        if (i >= tk.size() || !detail::is_number(tk[i], &v)) {
          throw std::runtime_error("LP parse: row '" + r.name + "' lacks a numeric rhs");
        }
        ++i;
        r.rhs = sgn * v - lhs_const;
        rows.push_back(std::move(r));
        break;
      }
      case kBounds: {
        // Forms: a <= x <= b | x <= b | x >= a | x = v | x free | a <= x
        auto read_num = [&](double* v) {
          double sgn = 1.0;
          std::size_t k = i;
          while (k < tk.size() && (tk[k] == "-" || tk[k] == "+")) {
            if (tk[k] == "-") sgn = -sgn;
            ++k;
          }
          if (k < tk.size() && detail::is_number(tk[k], v)) {
            *v *= sgn;
            i = k + 1;
            return true;
          }
          return false;
        };
        double a;
        if (read_num(&a)) {
          const std::string op1 = tk.at(i++);
          const std::string name = tk.at(i++);
          touch(name);
          if (!bounds.count(name)) bound_order.push_back(name);
          auto& b = bounds.emplace(name, std::make_pair(0.0, kInf)).first->second;
          if (op1 == "<=") b.first = a;
          else if (op1 == ">=") b.second = a;
          else b.first = b.second = a;
          if (i < tk.size() && (tk[i] == "<=" || tk[i] == ">=")) {
            const std::string op2 = tk[i++];
            double c;
            if (!read_num(&c)) throw std::runtime_error("LP parse: bad bound on '" + name + "'");
            if (op2 == "<=") b.second = c;
            else b.first = c;
          }
        } else {
          const std::string name = tk.at(i++);
          touch(name);
          if (!bounds.count(name)) bound_order.push_back(name);
          auto& b = bounds.emplace(name, std::make_pair(0.0, kInf)).first->second;
          const std::string op = detail::lower(tk.at(i++));
          if (op == "free") {
            b = {-kInf, kInf};
          } else {
            double c;
            if (!read_num(&c)) throw std::runtime_error("LP parse: bad bound on '" + name + "'");
            if (op == "<=") b.second = c;
            else if (op == ">=") b.first = c;
            else b.first = b.second = c;
          }
        }
        break;
      }
      case kGenerals:
        touch(tk[i]);
        kinds[tk[i++]] = VarKind::kInteger;
        break;
      case kBinaries:
        touch(tk[i]);
        kinds[tk[i++]] = VarKind::kBinary;
        break;
      default:
        throw std::runtime_error("LP parse: unexpected token '" + tk[i] + "'");
    }
  }

  std::vector<std::string> final_order = bound_order;
  for (const auto& n : order) {
    if (!bounds.count(n)) final_order.push_back(n);
  }
  MilpProblem p;
  p.set_objective_sense(sense);
  for (const auto& n : final_order) {
    double lb = 0.0, ub = kInf;
    VarKind kind = VarKind::kContinuous;
    if (auto it = kinds.find(n); it != kinds.end()) kind = it->second;
    if (kind == VarKind::kBinary) ub = 1.0;
    if (auto it = bounds.find(n); it != bounds.end()) {
      lb = it->second.first;
      ub = it->second.second;
    }
    p.add_variable(n, lb, ub, kind);
  }
  for (const auto& [n, c] : obj) p.add_objective(p.find(n), c);
  p.set_objective_offset(offset);
  for (const auto& r : rows) {
    std::vector<Term> terms;
    for (const auto& [n, c] : r.terms) {
      if (c != 0.0) terms.push_back({p.find(n), c});
    }
    p.add_constraint(r.name, std::move(terms), r.sense, r.rhs);
  }
  return p;
}

inline MilpProblem read_lp_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return read_lp(f);
}

// Reads "name value" pairs from a solution file; unknown tokens are skipped.
// Covers the plain-text solution files of the common solvers, where a line
// holds a variable name followed (possibly after other columns) by its value.
inline std::vector<double> read_solution_values(const MilpProblem& p, std::istream& is) {
  std::vector<double> x(p.num_vars(), 0.0);
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    for (std::size_t k = 0; k + 1 < tok.size(); ++k) {
      const int j = p.find(tok[k]);
      if (j < 0) continue;
      double v;
      if (detail::is_number(tok[k + 1], &v) ||
          (tok[k + 1].size() > 1 && tok[k + 1][0] == '-' &&
           detail::is_number(tok[k + 1].substr(1), &v) && (v = -v, true))) {
        x[j] = v;
        break;
      }
    }
  }
  return x;
}

// Routes a solve through an external executable.  `command` may contain
// {lp} and {sol} placeholders for the model and solution paths.
inline MilpSolution solve_external(const MilpProblem& p, const std::string& command,
                                   const std::string& workdir) {
  const std::string lp = workdir + "/model.lp";
  const std::string solf = workdir + "/model.sol";
  write_lp_file(p, lp);
  std::remove(solf.c_str());
  std::string cmd = command;
  for (auto [key, val] : {std::pair<std::string, std::string>{"{lp}", lp}, {"{sol}", solf}}) {
    for (std::size_t at; (at = cmd.find(key)) != std::string::npos;) cmd.replace(at, key.size(), val);
  }
  MilpSolution sol;
  if (std::system(cmd.c_str()) != 0) {
    sol.status = SolveStatus::kNumericalFailure;
    return sol;
  }
  std::ifstream f(solf);
  if (!f) {
    sol.status = SolveStatus::kNoSolution;
    return sol;
  }
  sol.x = read_solution_values(p, f);
  sol.objective = p.evaluate_objective(sol.x);
  sol.status = check_feasibility(p, sol.x).feasible(1e-6) ? SolveStatus::kOptimal
                                                            : SolveStatus::kNumericalFailure;
  return sol;
}

}  // namespace resilience::milp
