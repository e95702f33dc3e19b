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
#ifndef SURVFOREST_KM_HPP_
#define SURVFOREST_KM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "survforest/frame.hpp"

namespace survforest {

/// A right-continuous step estimate over ascending distinct event times.
/// Values before the first event time are survival 1 / hazard 0.
struct StepCurve {
  std::string group;
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> cum_hazard;
  std::vector<std::size_t> n_risk;
  std::vector<std::size_t> n_event;
  std::vector<double> band_lo;  // empty when no confidence band was requested
  std::vector<double> band_hi;

  /// Survival at time t by right-continuous step extension.
  double survival_at(double t) const;
  /// Cumulative hazard at time t by right-continuous step extension.
  double cum_hazard_at(double t) const;
};

struct CurveSet {
  std::vector<StepCurve> curves;
  std::vector<std::string> warnings;
};

/// Product-limit estimate. With `by`, each group is estimated independently;
/// empty groups are omitted with a warning record. `conf_level` in (0,1)
/// adds Greenwood-variance bands on the log-survival scale, clipped to [0,1].
CurveSet kaplan_meier(const Frame& frame,
                      const GroupAssignment* by = nullptr,
                      std::optional<double> conf_level = 0.95);

/// Nelson-Aalen cumulative hazard: H(t) = sum of d_i/n_i over event times
/// t_i <= t. Same grouping behavior as kaplan_meier.
CurveSet nelson_aalen(const Frame& frame, const GroupAssignment* by = nullptr);

/// Estimate from raw response vectors; `weight[i]` repeats row i (bootstrap
/// multiplicity). Ties: events enter the event count before censorings leave
/// the risk set.
StepCurve km_from_response(const std::vector<double>& time,
                           const std::vector<std::uint8_t>& status,
                           const std::vector<std::uint32_t>* weight = nullptr,
                           std::optional<double> conf_level = std::nullopt);

/// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-9).
double normal_quantile(double p);

}  // namespace survforest

#endif  // SURVFOREST_KM_HPP_
