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
#ifndef SURVFOREST_FOREST_HPP_
#define SURVFOREST_FOREST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "survforest/frame.hpp"
#include "survforest/rng.hpp"

namespace survforest {

struct GrowConfig {
  std::uint32_t ntree = 1000;
  std::uint32_t mtry = 0;     // 0 = ceil(sqrt(p))
  std::uint32_t nsplit = 10;  // 0 = exhaustive split search
  std::uint32_t nodesize = 3;
  std::uint64_t seed = 42;
  bool impute = true;
  std::uint32_t threads = 0;  // 0 = hardware concurrency; never affects output
};

/// Node split record. Continuous: rows with value <= `value` go left.
/// Categorical: rows whose level bit is set in `left_levels` go left.
struct Split {
  std::uint32_t var = 0;
  bool categorical = false;
  double value = 0.0;
  std::uint64_t left_levels = 0;
};

struct TreeNode {
  std::int32_t left = -1;   // -1 = terminal
  std::int32_t right = -1;
  std::uint32_t depth = 0;
  Split split;
  // All nodes: bootstrap members as a contiguous slice of Tree::members.
  std::uint32_t member_begin = 0;
  std::uint32_t member_count = 0;
  // Terminal nodes: product-limit survival and Nelson-Aalen hazard of the
  // members, sampled at the node's own event times expressed as indices into
  // the forest event-time grid.
  std::vector<std::uint32_t> grid;
  std::vector<double> surv;
  std::vector<double> chf;

  bool terminal() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;          // preorder; node 0 is the root
  std::vector<std::uint32_t> members;   // bootstrap-expanded row ids
  std::vector<std::uint32_t> inbag;     // per-row bootstrap multiplicity
  std::uint32_t max_terminal_depth = 0;

  /// Internal-node count per depth (root included); used by the minimal
  /// depth selection threshold.
  std::vector<std::uint32_t> internal_nodes_at_depth() const;
};

/// A grown survival forest. Carries a copy of its training frame: terminal
/// membership plus training cells are the donor pool for just-in-time
/// imputation at prediction time. Immutable after grow; safe to share across
/// threads.
class Forest {
 public:
  GrowConfig config;
  Frame train;
  std::vector<double> event_times;  // ascending distinct training event times
  std::vector<Tree> trees;

  std::size_t n_rows() const { return train.n(); }
  std::size_t n_vars() const { return train.n_vars(); }
  const std::vector<VariableSpec>& variables() const {
    return train.variables();
  }

  /// Throws validation_error unless `frame` equals the training frame cell
  /// for cell (variables, values, missing flags, response).
  void check_training_frame(const Frame& frame) const;
  /// Throws validation_error unless `frame` carries every forest variable
  /// with a compatible kind.
  void check_compatible_frame(const Frame& frame) const;
};

/// Grows `config.ntree` survival trees on independent bootstrap samples.
/// Each node draws mtry candidate variables without replacement and, per
/// candidate, up to nsplit random split points (rank-indexed into the
/// distinct in-node values, largest excluded); the split maximizing the
/// absolute standardized log-rank statistic wins. Candidate values missing
/// in-node are imputed by uniform draws from in-node donors for routing only;
/// statistics use non-missing rows. A node is terminal when it has fewer
/// than 2*nodesize bootstrap members, no events, or no valid split (both
/// daughters must keep >= nodesize members).
Forest grow(const Frame& frame, const GrowConfig& config);

/// Standardized two-sample log-rank statistic. `in_left[i]` marks group
/// membership. Sign follows the numerator (left events minus expectation);
/// zero variance yields 0.
double logrank_statistic(const std::vector<double>& time,
                         const std::vector<std::uint8_t>& status,
                         const std::vector<std::uint8_t>& in_left);

/// Fills missing cells with uniform draws from the non-missing entries.
/// Throws domain_error when every cell is missing.
std::vector<double> impute_at_node(const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& missing,
                                   Rng& rng);

/// How to route a row past a split on a missing or unknown value.
enum class MissingPolicy : std::uint8_t {
  kImputeFromNode,  // draw a donor value from the node's training members
  kRandomDaughter,
};

struct RouteStats {
  std::size_t unknown_level_routes = 0;
};

/// Accessor for one row during routing. `frame` supplies the cells;
/// var_map translates forest variable indices to frame columns; level_map
/// translates frame level codes to forest level codes (-1 = unknown).
class RowAccessor {
 public:
  RowAccessor(const Frame& frame, std::size_t row) : frame_(&frame), row_(row) {}

  void set_maps(const std::vector<std::size_t>* var_map,
                const std::vector<std::vector<std::int32_t>>* level_maps) {
    var_map_ = var_map;
    level_maps_ = level_maps;
  }
  /// Forces forest variable `v` to a fixed (non-missing) value.
  void override_var(std::uint32_t v, double value) {
    ov_var_[n_ov_] = v;
    ov_val_[n_ov_] = value;
    ++n_ov_;
  }

  /// Value of forest variable `v`; `missing` and `unknown_level` are outputs.
  double get(std::uint32_t v, bool& missing, bool& unknown_level) const;
  std::size_t row() const { return row_; }

 private:
  const Frame* frame_;
  std::size_t row_;
  const std::vector<std::size_t>* var_map_ = nullptr;
  const std::vector<std::vector<std::int32_t>>* level_maps_ = nullptr;
  std::uint32_t ov_var_[2] = {0, 0};
  double ov_val_[2] = {0.0, 0.0};
  std::uint32_t n_ov_ = 0;
};

/// Routes a row to a terminal node index. `train` is the forest's training
/// frame (donor source for kImputeFromNode); `rng` supplies donor draws and
/// random-daughter coins and may be null when the row has no missing or
/// unknown cells along its path.
std::int32_t route_row(const Forest& forest, const Tree& tree,
                       const Frame& train, const RowAccessor& row,
                       MissingPolicy policy, Rng* rng,
                       RouteStats* stats = nullptr);

struct ImputationReport {
  std::size_t cells_imputed = 0;
  std::vector<std::pair<std::size_t, std::string>> unresolved;  // (row, var)
};

/// Fills the training frame's missing cells from terminal-node donors: for
/// each tree where the row is in-bag, a donor is drawn from the non-missing
/// values of the out-of-bag rows landing in the same terminal; draws are
/// aggregated by mean (continuous) or plurality vote (categorical/boolean).
/// The input frame is not modified. Requires a forest grown with impute.
Frame finalize_imputation(const Forest& forest, const Frame& frame,
                          std::uint64_t seed, ImputationReport* report = nullptr);

}  // namespace survforest

#endif  // SURVFOREST_FOREST_HPP_
