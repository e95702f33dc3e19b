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
#include "survforest/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_set>

#include "survforest/km.hpp"

namespace survforest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Distinct random integers in [0, n); draw order preserved.
std::vector<std::uint32_t> sample_distinct(Rng& rng, std::uint64_t n,
                                           std::uint32_t k) {
  if (n <= 1024) {
    return rng.sample_indices(static_cast<std::uint32_t>(n), k);
  }
  std::vector<std::uint32_t> out;
  std::unordered_set<std::uint64_t> seen;
  out.reserve(k);
  while (out.size() < k) {
    const std::uint64_t v = rng.below(n);
    if (seen.insert(v).second) out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

struct GrowContext {
  const Frame& frame;
  GrowConfig cfg;
  std::vector<double> grid;
  std::uint32_t p = 0;
  std::uint32_t mtry = 0;
};

// One non-missing in-node observation of the candidate under evaluation.
struct Obs {
  double time;
  std::uint8_t status;
  double value;  // continuous value or level code
};

class TreeGrower {
 public:
  TreeGrower(const GrowContext& ctx, std::uint64_t tree_index)
      : ctx_(ctx),
        rng_(Rng::substream(ctx.cfg.seed,
                            {static_cast<std::uint64_t>(RngStream::kGrowTree),
                             tree_index})) {
    const std::size_t n = ctx_.frame.n();
    Rng boot = Rng::substream(
        ctx.cfg.seed,
        {static_cast<std::uint64_t>(RngStream::kBootstrap), tree_index});
    tree_.inbag.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++tree_.inbag[boot.below(n)];
    }
    tree_.members.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::uint32_t k = 0; k < tree_.inbag[r]; ++k) {
        tree_.members.push_back(static_cast<std::uint32_t>(r));
      }
    }
  }

  Tree grow() {
    build_node(0, static_cast<std::uint32_t>(tree_.members.size()), 0);
    return std::move(tree_);
  }

 private:
  struct BestSplit {
    double stat = -1.0;
    Split split;
    std::vector<double> fills;  // aligned to the member range; NaN = no fill
  };

  bool node_has_event(std::uint32_t begin, std::uint32_t end) const {
    for (std::uint32_t i = begin; i < end; ++i) {
      if (ctx_.frame.status(tree_.members[i])) return true;
    }
    return false;
  }

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end,
                          std::uint32_t depth) {
    const auto idx = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[idx].depth = depth;
    tree_.nodes[idx].member_begin = begin;
    tree_.nodes[idx].member_count = end - begin;

    BestSplit best;
    const bool size_ok = (end - begin) >= 2 * ctx_.cfg.nodesize;
    if (size_ok && node_has_event(begin, end)) {
      best = search_split(begin, end);
    }
    if (best.stat < 0.0) {
      finalize_terminal(idx, begin, end, depth);
      return idx;
    }

    const std::uint32_t mid = partition_members(begin, end, best);
    tree_.nodes[idx].split = best.split;
    const std::int32_t l = build_node(begin, mid, depth + 1);
    const std::int32_t r = build_node(mid, end, depth + 1);
    tree_.nodes[idx].left = l;
    tree_.nodes[idx].right = r;
    return idx;
  }

  BestSplit search_split(std::uint32_t begin, std::uint32_t end) {
    BestSplit best;
    const auto candidates = rng_.sample_indices(ctx_.p, ctx_.mtry);

    std::vector<double> fills;
    std::vector<Obs> obs;
    std::vector<double> values;
    for (const std::uint32_t v : candidates) {
      const auto& spec = ctx_.frame.variable(v);

      obs.clear();
      values.clear();
      fills.assign(end - begin, kNaN);
      std::size_t n_missing = 0;
      for (std::uint32_t i = begin; i < end; ++i) {
        const std::uint32_t row = tree_.members[i];
        if (ctx_.frame.missing(row, v)) {
          ++n_missing;
        } else {
          const double x = ctx_.frame.value(row, v);
          obs.push_back({ctx_.frame.time(row),
                         static_cast<std::uint8_t>(ctx_.frame.status(row)), x});
          values.push_back(x);
        }
      }
      if (values.empty()) continue;  // no donors: candidate unusable

      // Routing fills for missing members, drawn from the in-node donor
      // multiset. Consumed here so the draw sequence does not depend on
      // which candidate wins; discarded unless this candidate is chosen.
      if (ctx_.cfg.impute && n_missing > 0) {
        for (std::uint32_t i = begin; i < end; ++i) {
          if (ctx_.frame.missing(tree_.members[i], v)) {
            fills[i - begin] = values[rng_.below(values.size())];
          }
        }
      }

      std::vector<double> distinct = values;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()),
                     distinct.end());
      if (distinct.size() < 2) continue;  // pure in-node

      std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.status > b.status;
      });
      std::vector<double> slot_time;
      std::vector<std::uint32_t> slot_events;
      std::vector<std::uint32_t> slot_risk;
      build_pooled_table(obs, slot_time, slot_events, slot_risk);
      if (slot_time.empty()) continue;

      if (!is_categorical(spec.kind) && spec.kind != VarKind::kBoolean) {
        eval_continuous(v, obs, distinct, slot_time, slot_events, slot_risk,
                        fills, best);
      } else {
        eval_categorical(v, obs, distinct, slot_time, slot_events, slot_risk,
                         fills, best);
      }
    }
    return best;
  }

  static void build_pooled_table(const std::vector<Obs>& obs,
                                 std::vector<double>& slot_time,
                                 std::vector<std::uint32_t>& slot_events,
                                 std::vector<std::uint32_t>& slot_risk) {
    const std::size_t m = obs.size();
    std::size_t i = 0;
    while (i < m) {
      const double t = obs[i].time;
      std::uint32_t d = 0;
      std::size_t j = i;
      while (j < m && obs[j].time == t) {
        if (obs[j].status) ++d;
        ++j;
      }
      if (d > 0) {
        slot_time.push_back(t);
        slot_events.push_back(d);
        slot_risk.push_back(static_cast<std::uint32_t>(m - i));
      }
      i = j;
    }
  }

  // Standardized log-rank for one candidate partition. `left(obs)` decides
  // group membership; returns -1 when a daughter breaks the nodesize floor.
  template <typename LeftFn>
  double split_statistic(const std::vector<Obs>& obs,
                         const std::vector<double>& slot_time,
                         const std::vector<std::uint32_t>& slot_events,
                         const std::vector<std::uint32_t>& slot_risk,
                         LeftFn left) const {
    const std::size_t m = obs.size();
    std::size_t left_n = 0;
    for (const Obs& o : obs) {
      if (left(o.value)) ++left_n;
    }
    if (left_n < ctx_.cfg.nodesize || (m - left_n) < ctx_.cfg.nodesize) {
      return -1.0;
    }
    double num = 0.0;
    double var = 0.0;
    std::size_t i = 0;
    std::size_t at_left = left_n;
    for (std::size_t s = 0; s < slot_time.size(); ++s) {
      const double t = slot_time[s];
      while (i < m && obs[i].time < t) {
        if (left(obs[i].value)) --at_left;
        ++i;
      }
      std::uint32_t d_left = 0;
      for (std::size_t j = i; j < m && obs[j].time == t; ++j) {
        if (obs[j].status && left(obs[j].value)) ++d_left;
      }
      const double d = slot_events[s];
      const double r = slot_risk[s];
      const double rl = static_cast<double>(at_left);
      num += static_cast<double>(d_left) - rl * d / r;
      if (slot_risk[s] >= 2) {
        var += (rl / r) * (1.0 - rl / r) * ((r - d) / (r - 1.0)) * d;
      }
    }
    if (var <= 0.0) return 0.0;
    return std::fabs(num) / std::sqrt(var);
  }

  void eval_continuous(std::uint32_t v, const std::vector<Obs>& obs,
                       const std::vector<double>& distinct,
                       const std::vector<double>& slot_time,
                       const std::vector<std::uint32_t>& slot_events,
                       const std::vector<std::uint32_t>& slot_risk,
                       std::vector<double>& fills, BestSplit& best) {
    // Candidate split points are distinct in-node values, largest excluded.
    // Selection is by rank index so monotone transforms of the data change
    // recorded split values but never the chosen partitions.
    const auto n_points = static_cast<std::uint32_t>(distinct.size() - 1);
    std::vector<std::uint32_t> picks;
    if (ctx_.cfg.nsplit == 0 || n_points <= ctx_.cfg.nsplit) {
      picks.resize(n_points);
      std::iota(picks.begin(), picks.end(), 0u);
    } else {
      picks = rng_.sample_indices(n_points, ctx_.cfg.nsplit);
    }
    for (const std::uint32_t pi : picks) {
      const double c = distinct[pi];
      const double stat =
          split_statistic(obs, slot_time, slot_events, slot_risk,
                          [c](double x) { return x <= c; });
      if (stat > best.stat) {
        best.stat = stat;
        best.split = Split{v, false, c, 0};
        best.fills = fills;
      }
    }
  }

  void eval_categorical(std::uint32_t v, const std::vector<Obs>& obs,
                        const std::vector<double>& distinct,
                        const std::vector<double>& slot_time,
                        const std::vector<std::uint32_t>& slot_events,
                        const std::vector<std::uint32_t>& slot_risk,
                        std::vector<double>& fills, BestSplit& best) {
    const std::size_t k = distinct.size();
    if (k > 32) {
      throw domain_error("categorical variable with more than 32 in-node levels");
    }
    // Bipartitions of the observed levels, anchored so the lowest level is
    // always on the left: index m < 2^(k-1)-1 encodes which of the remaining
    // levels join it.
    const std::uint64_t n_parts = (1ULL << (k - 1)) - 1ULL;
    std::vector<std::uint32_t> picks;
    if (ctx_.cfg.nsplit == 0 || n_parts <= ctx_.cfg.nsplit) {
      picks.resize(static_cast<std::size_t>(n_parts));
      std::iota(picks.begin(), picks.end(), 0u);
    } else {
      picks = sample_distinct(rng_, n_parts, ctx_.cfg.nsplit);
    }
    for (const std::uint32_t pm : picks) {
      std::uint64_t mask = 1ULL << static_cast<std::uint32_t>(distinct[0]);
      for (std::size_t j = 0; j + 1 < k; ++j) {
        if (pm & (1u << j)) {
          mask |= 1ULL << static_cast<std::uint32_t>(distinct[j + 1]);
        }
      }
      const double stat = split_statistic(
          obs, slot_time, slot_events, slot_risk, [mask](double x) {
            return (mask >> static_cast<std::uint32_t>(x)) & 1ULL;
          });
      if (stat > best.stat) {
        best.stat = stat;
        best.split = Split{v, true, 0.0, mask};
        best.fills = fills;
      }
    }
  }

  // Stable partition of the member slice by the winning split; missing
  // members follow their routing fill (or a fair coin when imputation is
  // off). Returns the boundary index.
  std::uint32_t partition_members(std::uint32_t begin, std::uint32_t end,
                                  const BestSplit& best) {
    const Split& s = best.split;
    std::vector<std::uint32_t> left_rows, right_rows;
    left_rows.reserve(end - begin);
    for (std::uint32_t i = begin; i < end; ++i) {
      const std::uint32_t row = tree_.members[i];
      double x;
      if (ctx_.frame.missing(row, s.var)) {
        if (ctx_.cfg.impute) {
          x = best.fills[i - begin];
        } else {
          (rng_.below(2) == 0 ? left_rows : right_rows).push_back(row);
          continue;
        }
      } else {
        x = ctx_.frame.value(row, s.var);
      }
      const bool go_left =
          s.categorical ? ((s.left_levels >> static_cast<std::uint32_t>(x)) & 1ULL)
                        : (x <= s.value);
      (go_left ? left_rows : right_rows).push_back(row);
    }
    std::uint32_t i = begin;
    for (std::uint32_t r : left_rows) tree_.members[i++] = r;
    const std::uint32_t mid = i;
    for (std::uint32_t r : right_rows) tree_.members[i++] = r;
    return mid;
  }

  void finalize_terminal(std::int32_t idx, std::uint32_t begin,
                         std::uint32_t end, std::uint32_t depth) {
    std::vector<double> time;
    std::vector<std::uint8_t> status;
    time.reserve(end - begin);
    for (std::uint32_t i = begin; i < end; ++i) {
      time.push_back(ctx_.frame.time(tree_.members[i]));
      status.push_back(ctx_.frame.status(tree_.members[i]) ? 1 : 0);
    }
    const StepCurve c = km_from_response(time, status);
    auto& node = tree_.nodes[idx];
    node.grid.reserve(c.times.size());
    for (std::size_t j = 0; j < c.times.size(); ++j) {
      const auto it = std::lower_bound(ctx_.grid.begin(), ctx_.grid.end(),
                                       c.times[j]);
      node.grid.push_back(
          static_cast<std::uint32_t>(it - ctx_.grid.begin()));
    }
    node.surv = c.survival;
    node.chf = c.cum_hazard;
    tree_.max_terminal_depth = std::max(tree_.max_terminal_depth, depth);
  }

  const GrowContext& ctx_;
  Rng rng_;
  Tree tree_;
};

}  // namespace

std::vector<std::uint32_t> Tree::internal_nodes_at_depth() const {
  std::vector<std::uint32_t> counts;
  for (const auto& nd : nodes) {
    if (nd.terminal()) continue;
    if (counts.size() <= nd.depth) counts.resize(nd.depth + 1, 0);
    ++counts[nd.depth];
  }
  return counts;
}

void Forest::check_training_frame(const Frame& frame) const {
  check_compatible_frame(frame);
  if (frame.n() != n_rows()) {
    throw validation_error("frame has " + std::to_string(frame.n()) +
                           " rows, forest was grown on " +
                           std::to_string(n_rows()));
  }
  for (std::size_t r = 0; r < n_rows(); ++r) {
    if (frame.time(r) != train.time(r) || frame.status(r) != train.status(r)) {
      throw validation_error("frame response differs from training response");
    }
  }
  for (std::size_t v = 0; v < n_vars(); ++v) {
    const std::size_t col = frame.var_index(train.variable(v).name);
    for (std::size_t r = 0; r < n_rows(); ++r) {
      if (frame.missing(r, col) != train.missing(r, v) ||
          (!frame.missing(r, col) && frame.value(r, col) != train.value(r, v))) {
        throw validation_error("frame cells differ from the training frame");
      }
    }
  }
}

void Forest::check_compatible_frame(const Frame& frame) const {
  for (const auto& v : variables()) {
    const auto idx = frame.try_var_index(v.name);
    if (!idx) {
      throw validation_error("frame is missing variable '" + v.name + "'");
    }
    if (frame.variable(*idx).kind != v.kind) {
      throw validation_error("variable '" + v.name + "' has kind " +
                             to_string(frame.variable(*idx).kind) +
                             ", forest expects " + to_string(v.kind));
    }
  }
}

Forest grow(const Frame& frame, const GrowConfig& config) {
  if (frame.n() < 2) throw domain_error("need at least 2 rows to grow");
  const std::size_t p = frame.n_vars();
  if (p == 0) throw domain_error("no predictor variables");
  if (config.ntree < 1) throw usage_error("ntree must be >= 1");
  if (config.nodesize < 1) throw usage_error("nodesize must be >= 1");
  if (config.mtry > p) {
    throw usage_error("mtry " + std::to_string(config.mtry) + " exceeds " +
                      std::to_string(p) + " variables");
  }

  GrowContext ctx{frame, config, frame.event_times()};
  if (ctx.grid.empty()) throw domain_error("training data has no events");
  ctx.p = static_cast<std::uint32_t>(p);
  ctx.mtry = config.mtry > 0
                 ? config.mtry
                 : static_cast<std::uint32_t>(
                       std::ceil(std::sqrt(static_cast<double>(p))));
  ctx.cfg.mtry = ctx.mtry;

  Forest forest;
  forest.config = ctx.cfg;
  forest.train = frame;
  forest.event_times = ctx.grid;
  forest.trees.resize(config.ntree);

  unsigned n_threads = config.threads > 0
                           ? config.threads
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, config.ntree);

  std::atomic<std::uint32_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::uint32_t t = next.fetch_add(1);
      if (t >= config.ntree) break;
      forest.trees[t] = TreeGrower(ctx, t).grow();
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return forest;
}

double logrank_statistic(const std::vector<double>& time,
                         const std::vector<std::uint8_t>& status,
                         const std::vector<std::uint8_t>& in_left) {
  const std::size_t m = time.size();
  if (status.size() != m || in_left.size() != m) {
    throw validation_error("logrank inputs have different lengths");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return time[a] < time[b];
  });
  double num = 0.0;
  double var = 0.0;
  std::size_t i = 0;
  std::size_t at_left = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (in_left[j]) ++at_left;
  }
  std::size_t at_risk = m;
  while (i < m) {
    const double t = time[order[i]];
    std::size_t d = 0, d_left = 0, leaving = 0, leaving_left = 0;
    std::size_t j = i;
    while (j < m && time[order[j]] == t) {
      ++leaving;
      if (in_left[order[j]]) ++leaving_left;
      if (status[order[j]]) {
        ++d;
        if (in_left[order[j]]) ++d_left;
      }
      ++j;
    }
    if (d > 0) {
      const double dd = static_cast<double>(d);
      const double rr = static_cast<double>(at_risk);
      const double rl = static_cast<double>(at_left);
      num += static_cast<double>(d_left) - rl * dd / rr;
      if (at_risk >= 2) {
        var += (rl / rr) * (1.0 - rl / rr) * ((rr - dd) / (rr - 1.0)) * dd;
      }
    }
    at_risk -= leaving;
    at_left -= leaving_left;
    i = j;
  }
  if (var <= 0.0) return 0.0;
  return num / std::sqrt(var);
}

std::vector<double> impute_at_node(const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& missing,
                                   Rng& rng) {
  std::vector<double> donors;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!missing[i]) donors.push_back(values[i]);
  }
  if (donors.empty()) throw domain_error("no donors: every value is missing");
  std::vector<double> out = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (missing[i]) out[i] = donors[rng.below(donors.size())];
  }
  return out;
}

double RowAccessor::get(std::uint32_t v, bool& missing,
                        bool& unknown_level) const {
  missing = false;
  unknown_level = false;
  for (std::uint32_t i = 0; i < n_ov_; ++i) {
    if (ov_var_[i] == v) return ov_val_[i];
  }
  const std::size_t col = var_map_ ? (*var_map_)[v] : v;
  if (frame_->missing(row_, col)) {
    missing = true;
    return 0.0;
  }
  double x = frame_->value(row_, col);
  if (level_maps_ && !(*level_maps_)[v].empty()) {
    const auto code = static_cast<std::size_t>(x);
    const std::int32_t mapped = (*level_maps_)[v][code];
    if (mapped < 0) {
      unknown_level = true;
      return 0.0;
    }
    x = static_cast<double>(mapped);
  }
  return x;
}

std::int32_t route_row(const Forest& forest, const Tree& tree,
                       const Frame& train, const RowAccessor& row,
                       MissingPolicy policy, Rng* rng, RouteStats* stats) {
  std::int32_t cur = 0;
  for (;;) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(cur)];
    if (nd.terminal()) return cur;
    const Split& s = nd.split;
    bool missing = false, unknown = false;
    double x = row.get(s.var, missing, unknown);

    bool go_left;
    if (unknown || (missing && policy == MissingPolicy::kRandomDaughter)) {
      if (rng == nullptr) {
        throw validation_error("random routing requested without a seed stream");
      }
      if (unknown && stats != nullptr) ++stats->unknown_level_routes;
      go_left = rng->below(2) == 0;
    } else {
      if (missing) {
        // Donor draw from the node's non-missing training members.
        std::size_t donors = 0;
        for (std::uint32_t i = nd.member_begin;
             i < nd.member_begin + nd.member_count; ++i) {
          if (!train.missing(tree.members[i], s.var)) ++donors;
        }
        if (donors == 0) {
          if (rng == nullptr) {
            throw validation_error(
                "random routing requested without a seed stream");
          }
          go_left = rng->below(2) == 0;
          cur = go_left ? nd.left : nd.right;
          continue;
        }
        if (rng == nullptr) {
          throw validation_error("donor draw requested without a seed stream");
        }
        std::size_t pick = rng->below(donors);
        for (std::uint32_t i = nd.member_begin;; ++i) {
          const std::uint32_t r = tree.members[i];
          if (!train.missing(r, s.var)) {
            if (pick == 0) {
              x = train.value(r, s.var);
              break;
            }
            --pick;
          }
        }
      }
      go_left = s.categorical
                    ? ((s.left_levels >> static_cast<std::uint32_t>(x)) & 1ULL)
                    : (x <= s.value);
    }
    cur = go_left ? nd.left : nd.right;
  }
}

Frame finalize_imputation(const Forest& forest, const Frame& frame,
                          std::uint64_t seed, ImputationReport* report) {
  if (!forest.config.impute) {
    throw validation_error("forest was grown without imputation");
  }
  forest.check_training_frame(frame);
  const std::size_t n = frame.n();

  // Terminal assignments of the out-of-bag rows, per tree.
  std::vector<std::vector<std::int32_t>> oob_terminal(forest.trees.size());
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    oob_terminal[t].assign(n, -1);
    for (std::size_t r = 0; r < n; ++r) {
      if (tree.inbag[r] != 0) continue;
      Rng rng = Rng::substream(
          seed, {static_cast<std::uint64_t>(RngStream::kFinalImpute), t, r});
      RowAccessor row(frame, r);
      oob_terminal[t][r] = route_row(forest, tree, frame, row,
                                     MissingPolicy::kImputeFromNode, &rng);
    }
  }

  // In-bag terminal occurrences per row, per tree (duplicated bootstrap
  // entries can land in different terminals when their routing fills differ).
  std::vector<std::vector<std::vector<std::int32_t>>> inbag_terminals(
      forest.trees.size());
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    inbag_terminals[t].assign(n, {});
    for (std::size_t ni = 0; ni < tree.nodes.size(); ++ni) {
      const TreeNode& nd = tree.nodes[ni];
      if (!nd.terminal()) continue;
      for (std::uint32_t i = nd.member_begin;
           i < nd.member_begin + nd.member_count; ++i) {
        inbag_terminals[t][tree.members[i]].push_back(
            static_cast<std::int32_t>(ni));
      }
    }
  }

  Frame result = frame;
  ImputationReport rep;

  for (std::size_t v = 0; v < frame.n_vars(); ++v) {
    std::vector<double> col = frame.column(v);
    std::vector<std::uint8_t> ms = frame.missing_mask(v);
    const bool categorical = frame.variable(v).kind != VarKind::kContinuous;
    for (std::size_t r = 0; r < n; ++r) {
      if (!ms[r]) continue;
      Rng rng = Rng::substream(
          seed, {static_cast<std::uint64_t>(RngStream::kFinalImpute),
                 0xFFFFFFFFFFFFULL, r, v});
      double sum = 0.0;
      std::size_t count = 0;
      std::vector<std::size_t> votes;
      for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        for (const std::int32_t term : inbag_terminals[t][r]) {
          // Donors: out-of-bag rows in the same terminal, non-missing v.
          std::vector<double> donors;
          for (std::size_t q = 0; q < n; ++q) {
            if (oob_terminal[t][q] == term && !frame.missing(q, v)) {
              donors.push_back(frame.value(q, v));
            }
          }
          if (donors.empty()) continue;
          const double draw = donors[rng.below(donors.size())];
          if (categorical) {
            const auto code = static_cast<std::size_t>(draw);
            if (votes.size() <= code) votes.resize(code + 1, 0);
            ++votes[code];
          } else {
            sum += draw;
          }
          ++count;
        }
      }
      if (count == 0) {
        rep.unresolved.emplace_back(r, frame.variable(v).name);
        continue;
      }
      if (categorical) {
        std::size_t best_code = 0;
        for (std::size_t c = 1; c < votes.size(); ++c) {
          if (votes[c] > votes[best_code]) best_code = c;
        }
        col[r] = static_cast<double>(best_code);
      } else {
        col[r] = sum / static_cast<double>(count);
      }
      ms[r] = 0;
      ++rep.cells_imputed;
    }
    result = result.with_column(v, std::move(col), std::move(ms));
  }
  if (report != nullptr) *report = std::move(rep);
  return result;
}

}  // namespace survforest
