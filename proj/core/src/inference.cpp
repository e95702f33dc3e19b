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
#include "survforest/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace survforest {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

RoutingMaps make_routing_maps(const Forest& forest, const Frame& frame) {
  forest.check_compatible_frame(frame);
  RoutingMaps maps;
  maps.var_map.resize(forest.n_vars());
  maps.level_maps.resize(forest.n_vars());
  for (std::size_t v = 0; v < forest.n_vars(); ++v) {
    const auto& fvar = forest.variables()[v];
    const std::size_t col = frame.var_index(fvar.name);
    maps.var_map[v] = col;
    if (!is_categorical(fvar.kind)) continue;
    const auto& dlev = frame.variable(col).levels;
    if (dlev == fvar.levels) continue;  // identity, skip translation
    std::vector<std::int32_t> remap(dlev.size(), -1);
    for (std::size_t i = 0; i < dlev.size(); ++i) {
      for (std::size_t j = 0; j < fvar.levels.size(); ++j) {
        if (dlev[i] == fvar.levels[j]) {
          remap[i] = static_cast<std::int32_t>(j);
          break;
        }
      }
    }
    maps.level_maps[v] = std::move(remap);
  }
  return maps;
}

double EnsembleSurvival::survival_at(std::size_t row, double t) const {
  const auto& curve = survival[row];
  auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
  if (it == event_times.begin()) return 1.0;
  return curve[static_cast<std::size_t>(it - event_times.begin()) - 1];
}

namespace {

// Adds a terminal's step curve to a dense accumulator over the forest grid
// and returns the terminal's summed cumulative hazard (the mortality
// contribution).
double accumulate_terminal(const TreeNode& nd, std::size_t grid_size,
                           std::vector<double>* surv_acc) {
  double chf_sum = 0.0;
  double s = 1.0;
  double h = 0.0;
  std::size_t g = 0;
  for (std::size_t j = 0; j < nd.grid.size(); ++j) {
    for (; g < nd.grid[j]; ++g) {
      if (surv_acc != nullptr) (*surv_acc)[g] += s;
      chf_sum += h;
    }
    s = nd.surv[j];
    h = nd.chf[j];
  }
  for (; g < grid_size; ++g) {
    if (surv_acc != nullptr) (*surv_acc)[g] += s;
    chf_sum += h;
  }
  return chf_sum;
}

EnsembleSurvival finish_ensemble(const Forest& forest, const Frame& frame,
                                 std::vector<std::vector<double>> surv_sums,
                                 const std::vector<double>& chf_sums,
                                 const std::vector<std::uint32_t>& counts,
                                 bool oob) {
  EnsembleSurvival ens;
  ens.event_times = forest.event_times;
  ens.oob = oob;
  ens.time = frame.times();
  ens.status = frame.statuses();
  const std::size_t n = frame.n();
  ens.survival.resize(n);
  ens.mortality.assign(n, kNaN);
  ens.has_curve.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (counts[r] == 0) {
      ++ens.rows_without_curve;
      continue;
    }
    ens.has_curve[r] = 1;
    auto& row = surv_sums[r];
    const double inv = 1.0 / static_cast<double>(counts[r]);
    for (double& x : row) x *= inv;
    ens.survival[r] = std::move(row);
    ens.mortality[r] = chf_sums[r] * inv;
  }
  return ens;
}

}  // namespace

EnsembleSurvival predict_oob(const Forest& forest, const Frame& frame,
                             std::uint64_t seed) {
  forest.check_training_frame(frame);
  const std::size_t n = frame.n();
  const std::size_t grid = forest.event_times.size();
  std::vector<std::vector<double>> surv_sums(n,
                                             std::vector<double>(grid, 0.0));
  std::vector<double> chf_sums(n, 0.0);
  std::vector<std::uint32_t> counts(n, 0);

  const MissingPolicy policy = forest.config.impute
                                   ? MissingPolicy::kImputeFromNode
                                   : MissingPolicy::kRandomDaughter;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    for (std::size_t r = 0; r < n; ++r) {
      if (tree.inbag[r] != 0) continue;
      Rng rng = Rng::substream(
          seed, {static_cast<std::uint64_t>(RngStream::kOobRoute), t, r});
      RowAccessor row(frame, r);
      const std::int32_t term =
          route_row(forest, tree, frame, row, policy, &rng);
      chf_sums[r] += accumulate_terminal(
          tree.nodes[static_cast<std::size_t>(term)], grid, &surv_sums[r]);
      ++counts[r];
    }
  }
  return finish_ensemble(forest, frame, std::move(surv_sums), chf_sums,
                         counts, /*oob=*/true);
}

EnsembleSurvival predict_test(const Forest& forest, const Frame& newdata,
                              bool impute, std::uint64_t seed) {
  const RoutingMaps maps = make_routing_maps(forest, newdata);
  const std::size_t n = newdata.n();
  const std::size_t grid = forest.event_times.size();
  std::vector<std::vector<double>> surv_sums(n,
                                             std::vector<double>(grid, 0.0));
  std::vector<double> chf_sums(n, 0.0);
  std::vector<std::uint32_t> counts(n, 0);
  // Donor draws happen against the training rows held by the forest; rebuild
  // a minimal training frame view from the stored response plus the member
  // values is not possible, so donors use the training column cache below.
  std::size_t unknown = 0;

  const MissingPolicy policy = impute ? MissingPolicy::kImputeFromNode
                                      : MissingPolicy::kRandomDaughter;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    for (std::size_t r = 0; r < n; ++r) {
      Rng rng = Rng::substream(
          seed, {static_cast<std::uint64_t>(RngStream::kTestRoute), t, r});
      RowAccessor row(newdata, r);
      row.set_maps(&maps.var_map, &maps.level_maps);
      RouteStats stats;
      const std::int32_t term = route_row(forest, tree, *forest.train_frame,
                                          row, policy, &rng, &stats);
      unknown += stats.unknown_level_routes;
      chf_sums[r] += accumulate_terminal(
          tree.nodes[static_cast<std::size_t>(term)], grid, &surv_sums[r]);
      ++counts[r];
    }
  }
  EnsembleSurvival ens = finish_ensemble(forest, newdata,
                                         std::move(surv_sums), chf_sums,
                                         counts, /*oob=*/false);
  ens.unknown_level_routes = unknown;
  return ens;
}

double concordance_error(const std::vector<double>& mortality,
                         const std::vector<double>& time,
                         const std::vector<std::uint8_t>& status,
                         const std::vector<std::uint8_t>* valid) {
  const std::size_t n = time.size();
  if (mortality.size() != n || status.size() != n) {
    throw validation_error("concordance inputs have different lengths");
  }
  double pairs = 0.0;
  double concordant = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (valid != nullptr && !(*valid)[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (valid != nullptr && !(*valid)[j]) continue;
      if (!(time[i] < time[j]) || !status[i]) continue;
      pairs += 1.0;
      if (mortality[i] > mortality[j]) {
        concordant += 1.0;
      } else if (mortality[i] == mortality[j]) {
        concordant += 0.5;
      }
    }
  }
  if (pairs == 0.0) {
    throw domain_error("no permissible pair for concordance");
  }
  return 1.0 - concordant / pairs;
}

ErrorCurve error_curve(const Forest& forest, const Frame& frame,
                       std::uint64_t seed) {
  forest.check_training_frame(frame);
  const std::size_t n = frame.n();
  const std::size_t ntree = forest.trees.size();

  // Per tree: mortality contributions of its OOB rows, with the same route
  // streams as predict_oob so the curve endpoint matches it exactly.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> contrib(ntree);
  const MissingPolicy policy = forest.config.impute
                                   ? MissingPolicy::kImputeFromNode
                                   : MissingPolicy::kRandomDaughter;
  for (std::size_t t = 0; t < ntree; ++t) {
    const Tree& tree = forest.trees[t];
    for (std::size_t r = 0; r < n; ++r) {
      if (tree.inbag[r] != 0) continue;
      Rng rng = Rng::substream(
          seed, {static_cast<std::uint64_t>(RngStream::kOobRoute), t, r});
      RowAccessor row(frame, r);
      const std::int32_t term =
          route_row(forest, tree, frame, row, policy, &rng);
      const double chf_sum = accumulate_terminal(
          tree.nodes[static_cast<std::size_t>(term)],
          forest.event_times.size(), nullptr);
      contrib[t].emplace_back(static_cast<std::uint32_t>(r), chf_sum);
    }
  }

  ErrorCurve curve;
  curve.tree_counts.resize(ntree);
  std::iota(curve.tree_counts.begin(), curve.tree_counts.end(), 1u);
  curve.error.assign(ntree, kNaN);

  std::vector<double> sums(n, 0.0);
  std::vector<std::uint32_t> counts(n, 0);
  std::vector<double> mortality(n, 0.0);
  std::vector<std::uint8_t> valid(n, 0);
  for (std::size_t b = 0; b < ntree; ++b) {
    for (const auto& [r, chf] : contrib[b]) {
      sums[r] += chf;
      ++counts[r];
    }
    for (std::size_t r = 0; r < n; ++r) {
      valid[r] = counts[r] > 0;
      mortality[r] = valid[r] ? sums[r] / counts[r] : 0.0;
    }
    try {
      curve.error[b] =
          concordance_error(mortality, frame.times(), frame.statuses(), &valid);
    } catch (const domain_error&) {
      // Not enough OOB coverage yet at this prefix.
    }
  }
  return curve;
}

GroupedSurvival grouped_survival(const EnsembleSurvival& ensemble,
                                 const GroupAssignment& by, double conf_level,
                                 std::size_t bs_samples, std::uint64_t seed) {
  if (!(conf_level > 0.0 && conf_level < 1.0)) {
    throw domain_error("confidence level outside (0,1)");
  }
  GroupedSurvival out;
  out.times = ensemble.event_times;
  const std::size_t grid = out.times.size();
  const double p_lo = (1.0 - conf_level) / 2.0;
  const double p_hi = 1.0 - p_lo;

  for (std::size_t g = 0; g < by.n_groups(); ++g) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < by.membership.size(); ++r) {
      if (by.membership[r] == static_cast<std::int32_t>(g) &&
          ensemble.has_curve[r]) {
        rows.push_back(r);
      }
    }
    if (rows.empty()) {
      out.warnings.push_back("group '" + by.labels[g] + "' is empty, omitted");
      continue;
    }
    GroupedSurvival::Group grp;
    grp.label = by.labels[g];
    grp.n_rows = rows.size();
    grp.median.resize(grid);

    std::vector<double> vals(rows.size());
    for (std::size_t k = 0; k < grid; ++k) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        vals[i] = ensemble.survival[rows[i]][k];
      }
      std::sort(vals.begin(), vals.end());
      grp.median[k] = quantile_type7(vals, 0.5);
    }

    if (rows.size() < 2) {
      out.warnings.push_back("group '" + by.labels[g] +
                             "' has a single row, band omitted");
      out.groups.push_back(std::move(grp));
      continue;
    }
    const std::size_t B = bs_samples > 0 ? bs_samples : rows.size();
    Rng rng = Rng::substream(
        seed, {static_cast<std::uint64_t>(RngStream::kGroupedBand), g});
    // medians_bs[k] collects the bootstrap medians at time k.
    std::vector<std::vector<double>> medians_bs(grid,
                                                std::vector<double>(B, 0.0));
    std::vector<std::size_t> pick(rows.size());
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        pick[i] = rows[rng.below(rows.size())];
      }
      for (std::size_t k = 0; k < grid; ++k) {
        for (std::size_t i = 0; i < pick.size(); ++i) {
          vals[i] = ensemble.survival[pick[i]][k];
        }
        std::sort(vals.begin(), vals.end());
        medians_bs[k][b] = quantile_type7(vals, 0.5);
      }
    }
    grp.lo.resize(grid);
    grp.hi.resize(grid);
    for (std::size_t k = 0; k < grid; ++k) {
      std::sort(medians_bs[k].begin(), medians_bs[k].end());
      grp.lo[k] = quantile_type7(medians_bs[k], p_lo);
      grp.hi[k] = quantile_type7(medians_bs[k], p_hi);
    }
    grp.has_band = true;
    out.groups.push_back(std::move(grp));
  }
  return out;
}

}  // namespace survforest
