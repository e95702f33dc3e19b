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
#ifndef SURVFOREST_FRAME_HPP_
#define SURVFOREST_FRAME_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survforest/errors.hpp"

namespace survforest {

enum class VarKind : std::uint8_t {
  kContinuous,
  kOrderedCategorical,
  kUnorderedCategorical,
  kBoolean,
};

bool is_categorical(VarKind kind);
std::string to_string(VarKind kind);

/// One predictor column: its name, kind, and (for categorical kinds) the
/// ordered list of level labels. Level order is first appearance in the data
/// unless supplied explicitly.
struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  std::vector<std::string> levels;
};

/// Immutable columnar survival dataset. Continuous cells hold their value;
/// categorical and boolean cells hold the level index. The response
/// (time, status) is never missing.
class Frame {
 public:
  Frame() = default;
  Frame(std::vector<VariableSpec> vars, std::vector<std::vector<double>> cols,
        std::vector<std::vector<std::uint8_t>> missing,
        std::vector<double> time, std::vector<std::uint8_t> status,
        std::string time_name, std::string status_name);

  std::size_t n() const { return time_.size(); }
  std::size_t n_vars() const { return vars_.size(); }
  const std::vector<VariableSpec>& variables() const { return vars_; }
  const VariableSpec& variable(std::size_t v) const { return vars_[v]; }

  /// Index of a predictor by name; throws validation_error listing the known
  /// variables when absent.
  std::size_t var_index(const std::string& name) const;
  std::optional<std::size_t> try_var_index(const std::string& name) const;

  double value(std::size_t row, std::size_t v) const { return cols_[v][row]; }
  bool missing(std::size_t row, std::size_t v) const {
    return miss_[v][row] != 0;
  }
  const std::vector<double>& column(std::size_t v) const { return cols_[v]; }
  const std::vector<std::uint8_t>& missing_mask(std::size_t v) const {
    return miss_[v];
  }

  double time(std::size_t row) const { return time_[row]; }
  bool status(std::size_t row) const { return status_[row] != 0; }
  const std::vector<double>& times() const { return time_; }
  const std::vector<std::uint8_t>& statuses() const { return status_; }
  const std::string& time_name() const { return time_name_; }
  const std::string& status_name() const { return status_name_; }

  /// Level label of a categorical/boolean cell.
  const std::string& level_label(std::size_t row, std::size_t v) const;

  /// Row subset, preserving order of `rows`.
  Frame subset(const std::vector<std::size_t>& rows) const;

  /// Rows where variable `v` is non-missing / missing.
  std::vector<std::size_t> rows_with(std::size_t v) const;
  std::vector<std::size_t> rows_without(std::size_t v) const;

  /// Replaces one column (used by permutation importance). Lengths must match.
  Frame with_column(std::size_t v, std::vector<double> values,
                    std::vector<std::uint8_t> missing) const;

  /// Ascending distinct event times (rows with status true).
  std::vector<double> event_times() const;

 private:
  std::vector<VariableSpec> vars_;
  std::vector<std::vector<double>> cols_;
  std::vector<std::vector<std::uint8_t>> miss_;
  std::vector<double> time_;
  std::vector<std::uint8_t> status_;
  std::string time_name_ = "time";
  std::string status_name_ = "status";
};

/// Options for the delimited-text loader.
struct LoadOptions {
  char delimiter = ',';
  std::string na_token = "NA";
  std::string time_column = "years";
  std::string status_column = "status";
  /// Partial schema: entries override inference for the named columns. An
  /// entry with empty `levels` keeps data-driven levels.
  std::vector<VariableSpec> schema;
};

/// Reads an RFC-4180-style delimited file with a header row. Column types
/// are inferred unless overridden by `opts.schema`: a column is continuous
/// when every non-missing cell parses as a number, boolean when every
/// non-missing cell is a logical literal (TRUE/FALSE/T/F, case-insensitive),
/// and unordered-categorical otherwise.
Frame load_frame(const std::string& path, const LoadOptions& opts = {});
Frame load_frame(std::istream& in, const LoadOptions& opts = {});

/// Writes a frame back to delimited text; load_frame(save_frame(f)) rebuilds
/// identical cells and missing flags.
void save_frame(const Frame& frame, const std::string& path,
                const LoadOptions& opts = {});
void save_frame(const Frame& frame, std::ostream& out,
                const LoadOptions& opts = {});

struct MissingCensusRow {
  std::string variable;
  std::size_t count = 0;
};

/// Per-variable missing-cell counts; variables with none are omitted.
/// Descending by count, ties in input column order.
std::vector<MissingCensusRow> missing_census(const Frame& frame);

/// Row grouping for coplots and grouped estimators. `membership[i]` is the
/// group index of row i, or -1 for rows outside every group.
struct GroupAssignment {
  std::string variable;
  std::vector<double> breaks;        // continuous cuts; empty for categorical
  std::vector<std::string> labels;   // one display label per group
  std::vector<std::int32_t> membership;
  std::size_t n_groups() const { return labels.size(); }
  std::vector<std::size_t> group_rows(std::size_t g) const;
};

/// Type-7 (linear interpolation) empirical quantile of sorted values.
double quantile_type7(const std::vector<double>& sorted, double p);

/// Cuts `values` into `groups` intervals at type-7 quantile break points;
/// the lowest break is shifted down by 1e-7 so the minimum value lands in the
/// first interval. Requires at least `groups` distinct non-missing values.
GroupAssignment quantile_cuts(const std::vector<double>& values,
                              const std::vector<std::uint8_t>& missing,
                              std::size_t groups,
                              const std::string& variable = "");

/// Left-open right-closed cut at explicit ascending breaks. Values outside
/// (breaks.front(), breaks.back()] get membership -1.
GroupAssignment cut_with_breaks(const std::vector<double>& values,
                                const std::vector<std::uint8_t>& missing,
                                const std::vector<double>& breaks,
                                const std::string& variable = "");

/// Groups rows of a categorical/boolean column by level.
GroupAssignment group_by_levels(const Frame& frame, std::size_t v);

/// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double x);

}  // namespace survforest

#endif  // SURVFOREST_FRAME_HPP_
