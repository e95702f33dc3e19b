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
#include "survforest/km.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace survforest {

double StepCurve::survival_at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

double StepCurve::cum_hazard_at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return cum_hazard[static_cast<std::size_t>(it - times.begin()) - 1];
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("quantile level outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - plow) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

StepCurve km_from_response(const std::vector<double>& time,
                           const std::vector<std::uint8_t>& status,
                           const std::vector<std::uint32_t>* weight,
                           std::optional<double> conf_level) {
  const std::size_t n = time.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (time[a] != time[b]) return time[a] < time[b];
    return status[a] > status[b];
  });

  StepCurve curve;
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += weight ? (*weight)[i] : 1;
  }

  double surv = 1.0;
  double chf = 0.0;
  double greenwood = 0.0;
  bool greenwood_inf = false;
  std::size_t at_risk = total;
  const double z =
      conf_level ? normal_quantile(0.5 + *conf_level / 2.0) : 0.0;

  std::size_t i = 0;
  while (i < n) {
    const double t = time[order[i]];
    std::size_t deaths = 0;
    std::size_t leaving = 0;
    while (i < n && time[order[i]] == t) {
      const std::size_t w = weight ? (*weight)[order[i]] : 1;
      leaving += w;
      if (status[order[i]]) deaths += w;
      ++i;
    }
    if (deaths > 0) {
      const double d = static_cast<double>(deaths);
      const double r = static_cast<double>(at_risk);
      surv *= 1.0 - d / r;
      chf += d / r;
      if (at_risk > deaths) {
        greenwood += d / (r * (r - d));
      } else {
        greenwood_inf = true;
      }
      curve.times.push_back(t);
      curve.survival.push_back(surv);
      curve.cum_hazard.push_back(chf);
      curve.n_risk.push_back(at_risk);
      curve.n_event.push_back(deaths);
      if (conf_level) {
        if (surv <= 0.0) {
          curve.band_lo.push_back(0.0);
          curve.band_hi.push_back(0.0);
        } else if (greenwood_inf) {
          curve.band_lo.push_back(0.0);
          curve.band_hi.push_back(1.0);
        } else {
          const double hw = z * std::sqrt(greenwood);
          curve.band_lo.push_back(std::max(0.0, surv * std::exp(-hw)));
          curve.band_hi.push_back(std::min(1.0, surv * std::exp(hw)));
        }
      }
    }
    at_risk -= leaving;
  }
  return curve;
}

namespace {

CurveSet estimate_groups(const Frame& frame, const GroupAssignment* by,
                         std::optional<double> conf_level) {
  CurveSet out;
  if (by == nullptr) {
    if (frame.n() == 0) throw domain_error("empty frame");
    StepCurve c =
        km_from_response(frame.times(), frame.statuses(), nullptr, conf_level);
    out.curves.push_back(std::move(c));
    return out;
  }
  for (std::size_t g = 0; g < by->n_groups(); ++g) {
    std::vector<double> time;
    std::vector<std::uint8_t> status;
    for (std::size_t r = 0; r < frame.n(); ++r) {
      if (by->membership[r] == static_cast<std::int32_t>(g)) {
        time.push_back(frame.time(r));
        status.push_back(frame.status(r) ? 1 : 0);
      }
    }
    if (time.empty()) {
      out.warnings.push_back("group '" + by->labels[g] + "' is empty, omitted");
      continue;
    }
    StepCurve c = km_from_response(time, status, nullptr, conf_level);
    c.group = by->labels[g];
    out.curves.push_back(std::move(c));
  }
  return out;
}

}  // namespace

CurveSet kaplan_meier(const Frame& frame, const GroupAssignment* by,
                      std::optional<double> conf_level) {
  if (conf_level && !(*conf_level > 0.0 && *conf_level < 1.0)) {
    throw domain_error("confidence level outside (0,1)");
  }
  return estimate_groups(frame, by, conf_level);
}

CurveSet nelson_aalen(const Frame& frame, const GroupAssignment* by) {
  return estimate_groups(frame, by, std::nullopt);
}

}  // namespace survforest
