/*
 * Copyright 2026 The survforest authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "survforest/frame.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace survforest {

bool is_categorical(VarKind kind) {
  return kind == VarKind::kOrderedCategorical ||
         kind == VarKind::kUnorderedCategorical;
}

std::string to_string(VarKind kind) {
  switch (kind) {
    case VarKind::kContinuous: return "continuous";
    case VarKind::kOrderedCategorical: return "ordered-categorical";
    case VarKind::kUnorderedCategorical: return "unordered-categorical";
    case VarKind::kBoolean: return "boolean";
  }
  return "?";
}

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && !s.empty();
}

bool is_true_token(const std::string& s) {
  return s == "TRUE" || s == "true" || s == "T" || s == "True";
}
bool is_false_token(const std::string& s) {
  return s == "FALSE" || s == "false" || s == "F" || s == "False";
}
bool is_logical_token(const std::string& s) {
  return is_true_token(s) || is_false_token(s);
}

// Splits one physical CSV record. Quoted fields may contain the delimiter
// and doubled quotes.
std::vector<std::string> split_record(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool needs_quoting(const std::string& s, char delim) {
  return s.find(delim) != std::string::npos ||
         s.find('"') != std::string::npos || s.find('\n') != std::string::npos;
}

std::string quote_field(const std::string& s, char delim) {
  if (!needs_quoting(s, delim)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

Frame::Frame(std::vector<VariableSpec> vars,
             std::vector<std::vector<double>> cols,
             std::vector<std::vector<std::uint8_t>> missing,
             std::vector<double> time, std::vector<std::uint8_t> status,
             std::string time_name, std::string status_name)
    : vars_(std::move(vars)),
      cols_(std::move(cols)),
      miss_(std::move(missing)),
      time_(std::move(time)),
      status_(std::move(status)),
      time_name_(std::move(time_name)),
      status_name_(std::move(status_name)) {
  const std::size_t n = time_.size();
  if (status_.size() != n) {
    throw validation_error("response columns have different lengths");
  }
  std::set<std::string> names;
  for (const auto& v : vars_) {
    if (!names.insert(v.name).second) {
      throw validation_error("duplicate variable name: " + v.name);
    }
    if (is_categorical(v.kind) && v.levels.empty()) {
      throw validation_error("categorical variable without levels: " + v.name);
    }
  }
  if (cols_.size() != vars_.size() || miss_.size() != vars_.size()) {
    throw validation_error("column count does not match variable count");
  }
  for (std::size_t v = 0; v < cols_.size(); ++v) {
    if (cols_[v].size() != n || miss_[v].size() != n) {
      throw validation_error("column length mismatch for " + vars_[v].name);
    }
  }
  for (double t : time_) {
    if (!(t >= 0.0)) throw validation_error("negative or NaN response time");
  }
}

std::size_t Frame::var_index(const std::string& name) const {
  auto idx = try_var_index(name);
  if (idx) return *idx;
  std::string known;
  for (const auto& v : vars_) {
    if (!known.empty()) known += ", ";
    known += v.name;
  }
  throw validation_error("unknown variable '" + name + "' (known: " + known +
                         ")");
}

std::optional<std::size_t> Frame::try_var_index(
    const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return i;
  }
  return std::nullopt;
}

const std::string& Frame::level_label(std::size_t row, std::size_t v) const {
  static const std::string empty;
  if (missing(row, v)) return empty;
  const auto& spec = vars_[v];
  const auto idx = static_cast<std::size_t>(cols_[v][row]);
  if (spec.kind == VarKind::kBoolean) {
    static const std::string f = "FALSE", t = "TRUE";
    return idx ? t : f;
  }
  return spec.levels.at(idx);
}

Frame Frame::subset(const std::vector<std::size_t>& rows) const {
  std::vector<std::vector<double>> cols(vars_.size());
  std::vector<std::vector<std::uint8_t>> miss(vars_.size());
  for (std::size_t v = 0; v < vars_.size(); ++v) {
    cols[v].reserve(rows.size());
    miss[v].reserve(rows.size());
    for (std::size_t r : rows) {
      cols[v].push_back(cols_[v][r]);
      miss[v].push_back(miss_[v][r]);
    }
  }
  std::vector<double> time;
  std::vector<std::uint8_t> status;
  time.reserve(rows.size());
  status.reserve(rows.size());
  for (std::size_t r : rows) {
    time.push_back(time_[r]);
    status.push_back(status_[r]);
  }
  return Frame(vars_, std::move(cols), std::move(miss), std::move(time),
               std::move(status), time_name_, status_name_);
}

std::vector<std::size_t> Frame::rows_with(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n(); ++r) {
    if (!missing(r, v)) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> Frame::rows_without(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n(); ++r) {
    if (missing(r, v)) out.push_back(r);
  }
  return out;
}

Frame Frame::with_column(std::size_t v, std::vector<double> values,
                         std::vector<std::uint8_t> missing) const {
  if (values.size() != n() || missing.size() != n()) {
    throw validation_error("replacement column has wrong length");
  }
  auto cols = cols_;
  auto miss = miss_;
  cols[v] = std::move(values);
  miss[v] = std::move(missing);
  return Frame(vars_, std::move(cols), std::move(miss), time_, status_,
               time_name_, status_name_);
}

std::vector<double> Frame::event_times() const {
  std::set<double> distinct;
  for (std::size_t r = 0; r < n(); ++r) {
    if (status(r)) distinct.insert(time_[r]);
  }
  return std::vector<double>(distinct.begin(), distinct.end());
}

Frame load_frame(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open file: " + path);
  return load_frame(in, opts);
}

Frame load_frame(std::istream& in, const LoadOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) {
    throw validation_error("input has no header row");
  }
  const std::vector<std::string> header = split_record(line, opts.delimiter);
  const std::size_t ncol = header.size();

  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (col_of.count(header[c])) {
      throw validation_error("duplicate column in header: " + header[c]);
    }
    col_of[header[c]] = c;
  }
  auto require_col = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end()) {
      throw validation_error("missing response column '" + name + "'");
    }
    return it->second;
  };
  const std::size_t time_col = require_col(opts.time_column);
  const std::size_t status_col = require_col(opts.status_column);

  // Raw cells, column-major.
  std::vector<std::vector<std::string>> raw(ncol);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == EOF) break;
    auto fields = split_record(line, opts.delimiter);
    if (fields.size() != ncol) {
      throw parse_error("expected " + std::to_string(ncol) + " columns, got " +
                            std::to_string(fields.size()),
                        line_no);
    }
    for (std::size_t c = 0; c < ncol; ++c) raw[c].push_back(std::move(fields[c]));
  }
  const std::size_t n = raw.empty() ? 0 : raw[0].size();

  // Response.
  std::vector<double> time(n);
  std::vector<std::uint8_t> status(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string& ts = raw[time_col][r];
    const std::string& ss = raw[status_col][r];
    if (ts == opts.na_token || ss == opts.na_token) {
      throw parse_error("missing response cell", r + 2);
    }
    double t;
    if (!parse_double(ts, t) || !(t >= 0.0)) {
      throw parse_error("bad time value '" + ts + "'", r + 2);
    }
    time[r] = t;
    if (is_true_token(ss)) {
      status[r] = 1;
    } else if (is_false_token(ss)) {
      status[r] = 0;
    } else {
      double sv;
      if (!parse_double(ss, sv) || (sv != 0.0 && sv != 1.0)) {
        throw parse_error("bad status value '" + ss + "'", r + 2);
      }
      status[r] = sv != 0.0;
    }
  }

  std::unordered_map<std::string, const VariableSpec*> overrides;
  for (const auto& s : opts.schema) {
    if (!col_of.count(s.name)) {
      throw validation_error("schema names unknown column '" + s.name + "'");
    }
    overrides[s.name] = &s;
  }

  std::vector<VariableSpec> vars;
  std::vector<std::vector<double>> cols;
  std::vector<std::vector<std::uint8_t>> miss;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (c == time_col || c == status_col) continue;
    VariableSpec spec;
    spec.name = header[c];

    bool all_numeric = true;
    bool all_logical = true;
    bool any_value = false;
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& cell = raw[c][r];
      if (cell == opts.na_token) continue;
      any_value = true;
      double d;
      if (!parse_double(cell, d)) all_numeric = false;
      if (!is_logical_token(cell)) all_logical = false;
    }

    const VariableSpec* ov = nullptr;
    if (auto it = overrides.find(spec.name); it != overrides.end()) {
      ov = it->second;
    }
    if (ov) {
      spec.kind = ov->kind;
      spec.levels = ov->levels;
    } else if (any_value && all_numeric) {
      spec.kind = VarKind::kContinuous;
    } else if (any_value && all_logical) {
      spec.kind = VarKind::kBoolean;
    } else {
      spec.kind = VarKind::kUnorderedCategorical;
    }

    std::vector<double> col(n, 0.0);
    std::vector<std::uint8_t> ms(n, 0);
    if (spec.kind == VarKind::kContinuous) {
      for (std::size_t r = 0; r < n; ++r) {
        const std::string& cell = raw[c][r];
        if (cell == opts.na_token) {
          ms[r] = 1;
          continue;
        }
        double d;
        if (!parse_double(cell, d)) {
          throw parse_error("non-numeric token '" + cell + "' in numeric column '" +
                                spec.name + "'",
                            r + 2);
        }
        col[r] = d;
      }
    } else if (spec.kind == VarKind::kBoolean) {
      for (std::size_t r = 0; r < n; ++r) {
        const std::string& cell = raw[c][r];
        if (cell == opts.na_token) {
          ms[r] = 1;
          continue;
        }
        if (is_true_token(cell)) col[r] = 1.0;
        else if (is_false_token(cell)) col[r] = 0.0;
        else if (cell == "1") col[r] = 1.0;
        else if (cell == "0") col[r] = 0.0;
        else
          throw parse_error("non-logical token '" + cell + "' in boolean column '" +
                                spec.name + "'",
                            r + 2);
      }
    } else {
      const bool fixed_levels = !spec.levels.empty();
      std::unordered_map<std::string, std::size_t> level_of;
      for (std::size_t i = 0; i < spec.levels.size(); ++i) {
        level_of[spec.levels[i]] = i;
      }
      for (std::size_t r = 0; r < n; ++r) {
        const std::string& cell = raw[c][r];
        if (cell == opts.na_token) {
          ms[r] = 1;
          continue;
        }
        auto it = level_of.find(cell);
        if (it == level_of.end()) {
          if (fixed_levels) {
            throw parse_error("value '" + cell + "' not among declared levels of '" +
                                  spec.name + "'",
                              r + 2);
          }
          it = level_of.emplace(cell, spec.levels.size()).first;
          spec.levels.push_back(cell);
        }
        col[r] = static_cast<double>(it->second);
      }
      if (spec.levels.empty()) spec.levels.push_back("NA-only");
    }
    vars.push_back(std::move(spec));
    cols.push_back(std::move(col));
    miss.push_back(std::move(ms));
  }

  return Frame(std::move(vars), std::move(cols), std::move(miss),
               std::move(time), std::move(status), opts.time_column,
               opts.status_column);
}

void save_frame(const Frame& frame, const std::string& path,
                const LoadOptions& opts) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write file: " + path);
  save_frame(frame, out, opts);
}

void save_frame(const Frame& frame, std::ostream& out,
                const LoadOptions& opts) {
  const char d = opts.delimiter;
  out << quote_field(frame.status_name(), d);
  for (const auto& v : frame.variables()) {
    out << d << quote_field(v.name, d);
  }
  out << d << quote_field(frame.time_name(), d) << "\n";
  for (std::size_t r = 0; r < frame.n(); ++r) {
    out << (frame.status(r) ? "TRUE" : "FALSE");
    for (std::size_t v = 0; v < frame.n_vars(); ++v) {
      out << d;
      if (frame.missing(r, v)) {
        out << opts.na_token;
      } else if (frame.variable(v).kind == VarKind::kContinuous) {
        out << format_double(frame.value(r, v));
      } else {
        out << quote_field(frame.level_label(r, v), d);
      }
    }
    out << d << format_double(frame.time(r)) << "\n";
  }
}

std::vector<MissingCensusRow> missing_census(const Frame& frame) {
  std::vector<MissingCensusRow> rows;
  for (std::size_t v = 0; v < frame.n_vars(); ++v) {
    std::size_t cnt = 0;
    for (std::size_t r = 0; r < frame.n(); ++r) {
      if (frame.missing(r, v)) ++cnt;
    }
    if (cnt > 0) rows.push_back({frame.variable(v).name, cnt});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MissingCensusRow& a, const MissingCensusRow& b) {
                     return a.count > b.count;
                   });
  return rows;
}

std::vector<std::size_t> GroupAssignment::group_rows(std::size_t g) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < membership.size(); ++r) {
    if (membership[r] == static_cast<std::int32_t>(g)) out.push_back(r);
  }
  return out;
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw domain_error("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

GroupAssignment assign_from_breaks(const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& missing,
                                   std::vector<double> breaks,
                                   const std::string& variable) {
  GroupAssignment ga;
  ga.variable = variable;
  ga.breaks = std::move(breaks);
  const std::size_t groups = ga.breaks.size() - 1;
  for (std::size_t g = 0; g < groups; ++g) {
    ga.labels.push_back("(" + format_double(ga.breaks[g]) + "," +
                        format_double(ga.breaks[g + 1]) + "]");
  }
  ga.membership.assign(values.size(), -1);
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (!missing.empty() && missing[r]) continue;
    const double x = values[r];
    if (!(x > ga.breaks.front()) || !(x <= ga.breaks.back())) continue;
    const auto it =
        std::lower_bound(ga.breaks.begin() + 1, ga.breaks.end(), x);
    ga.membership[r] =
        static_cast<std::int32_t>(std::distance(ga.breaks.begin() + 1, it));
  }
  return ga;
}

}  // namespace

GroupAssignment quantile_cuts(const std::vector<double>& values,
                              const std::vector<std::uint8_t>& missing,
                              std::size_t groups,
                              const std::string& variable) {
  if (groups < 2) throw domain_error("need at least 2 groups");
  std::vector<double> present;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (missing.empty() || !missing[r]) present.push_back(values[r]);
  }
  std::sort(present.begin(), present.end());
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (i == 0 || present[i] != present[i - 1]) ++distinct;
  }
  if (distinct < groups) {
    throw domain_error("only " + std::to_string(distinct) +
                       " distinct values for " + std::to_string(groups) +
                       " groups");
  }
  std::vector<double> breaks;
  for (std::size_t k = 0; k <= groups; ++k) {
    breaks.push_back(
        quantile_type7(present, static_cast<double>(k) / groups));
  }
  breaks.front() -= 1e-7;
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  if (breaks.size() < 3) {
    throw domain_error("quantile breaks collapse to fewer than 2 groups");
  }
  return assign_from_breaks(values, missing, std::move(breaks), variable);
}

GroupAssignment cut_with_breaks(const std::vector<double>& values,
                                const std::vector<std::uint8_t>& missing,
                                const std::vector<double>& breaks,
                                const std::string& variable) {
  if (breaks.size() < 2) throw domain_error("need at least 2 break points");
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    if (!(breaks[i] > breaks[i - 1])) {
      throw domain_error("breaks must be strictly ascending");
    }
  }
  return assign_from_breaks(values, missing, breaks, variable);
}

GroupAssignment group_by_levels(const Frame& frame, std::size_t v) {
  const auto& spec = frame.variable(v);
  GroupAssignment ga;
  ga.variable = spec.name;
  if (spec.kind == VarKind::kBoolean) {
    ga.labels = {"FALSE", "TRUE"};
  } else if (is_categorical(spec.kind)) {
    ga.labels = spec.levels;
  } else {
    throw domain_error("variable '" + spec.name + "' is not categorical");
  }
  ga.membership.assign(frame.n(), -1);
  for (std::size_t r = 0; r < frame.n(); ++r) {
    if (!frame.missing(r, v)) {
      ga.membership[r] = static_cast<std::int32_t>(frame.value(r, v));
    }
  }
  return ga;
}

}  // namespace survforest
