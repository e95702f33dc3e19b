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
#ifndef SURVFOREST_INFERENCE_HPP_
#define SURVFOREST_INFERENCE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "survforest/forest.hpp"
#include "survforest/frame.hpp"

namespace survforest {

/// Translation tables for routing rows of `frame` through a forest whose
/// variables may sit at different column positions or carry different level
/// codes.
struct RoutingMaps {
  std::vector<std::size_t> var_map;  // forest var -> frame column
  // forest var -> (frame level code -> forest level code, -1 = unknown);
  // empty vector = no translation needed.
  std::vector<std::vector<std::int32_t>> level_maps;
};

RoutingMaps make_routing_maps(const Forest& forest, const Frame& frame);

/// Per-row ensemble survival curves over the forest event-time grid, plus the
/// scalar mortality score (cumulative hazard summed over the grid).
struct EnsembleSurvival {
  std::vector<double> event_times;
  std::vector<std::vector<double>> survival;  // empty when the row has no curve
  std::vector<double> mortality;              // NaN when the row has no curve
  std::vector<std::uint8_t> has_curve;
  bool oob = false;
  std::vector<double> time;           // response of the predicted frame
  std::vector<std::uint8_t> status;
  std::size_t rows_without_curve = 0;
  std::size_t unknown_level_routes = 0;

  /// Row survival at `t` by right-continuous step extension.
  double survival_at(std::size_t row, double t) const;
};

/// Out-of-bag ensemble: row i averages the terminal curves of the trees
/// where i is not in the bootstrap sample. Rows in-bag everywhere get no
/// curve and are counted in rows_without_curve. `frame` must be the grow
/// frame; `seed` drives donor draws for rows with missing values.
EnsembleSurvival predict_oob(const Forest& forest, const Frame& frame,
                             std::uint64_t seed);

/// Full-ensemble prediction for new data. Missing cells are imputed
/// just-in-time from in-node training donors when `impute` is set, otherwise
/// routed to a random daughter; unknown categorical levels always take a
/// random daughter and are counted.
EnsembleSurvival predict_test(const Forest& forest, const Frame& newdata,
                              bool impute, std::uint64_t seed);

/// Harrell-type concordance error in [0,1]: over pairs where the shorter
/// time is an event, a pair is concordant when the shorter-lived row has the
/// higher mortality; score ties count 1/2; error = 1 - C. `valid` masks rows
/// that participate (null = all rows). Throws domain_error when no
/// permissible pair exists.
double concordance_error(const std::vector<double>& mortality,
                         const std::vector<double>& time,
                         const std::vector<std::uint8_t>& status,
                         const std::vector<std::uint8_t>* valid = nullptr);

struct ErrorCurve {
  std::vector<std::uint32_t> tree_counts;  // 1..ntree
  std::vector<double> error;               // NaN until a prefix is scoreable
};

/// OOB error after each tree-count prefix; error[b-1] scores the ensemble
/// restricted to the first b trees, excluding rows not yet OOB in any of
/// them. The final entry equals concordance_error over predict_oob with the
/// same seed.
ErrorCurve error_curve(const Forest& forest, const Frame& frame,
                       std::uint64_t seed);

struct GroupedSurvival {
  struct Group {
    std::string label;
    std::vector<double> median;
    std::vector<double> lo;
    std::vector<double> hi;
    bool has_band = false;
    std::size_t n_rows = 0;
  };
  std::vector<double> times;
  std::vector<Group> groups;
  std::vector<std::string> warnings;
};

/// Across-row median survival per group and time, with a percentile bootstrap
/// band on the median (bs_samples row-resamples; 0 = one per group member).
GroupedSurvival grouped_survival(const EnsembleSurvival& ensemble,
                                 const GroupAssignment& by, double conf_level,
                                 std::size_t bs_samples, std::uint64_t seed);

}  // namespace survforest

#endif  // SURVFOREST_INFERENCE_HPP_
