#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "cadam/errors.hpp"
#include "cadam/hyperparams.hpp"
#include "cadam/landscapes.hpp"
#include "cadam/models.hpp"
#include "cadam/optim.hpp"
#include "cadam/rng.hpp"

namespace cadam {

using Objective =
    std::variant<MovingMinSpec, Landscape2D, ConvexAbsStream, ModelTask>;

// A fully-seeded experiment description. An empty init is resolved at run
// time: moving-minimum and convex-stream runs draw x0 ~ U(-1,1) from the run
// seed, 2D landscapes use their customary start, model tasks start at zero.
struct Scenario {
  Objective objective;
  std::optional<NoiseSpec> noise;
  std::int64_t horizon = 100;
  std::vector<double> init;
  HyperParams hp;
  std::uint64_t seed = 0;
  bool record_trajectory = true;  // honored for dimension <= 4
};

inline std::size_t objective_dim(const Objective& obj) {
  if (std::holds_alternative<MovingMinSpec>(obj)) return 1;
  if (std::holds_alternative<Landscape2D>(obj)) return 2;
  if (std::holds_alternative<ConvexAbsStream>(obj)) return 1;
  return param_count(std::get<ModelTask>(obj));
}

namespace detail {
inline constexpr std::uint64_t kInitTag = 0x696e6974ull;
inline constexpr std::uint64_t kConvexTag = 0x61627378ull;
}  // namespace detail

inline std::vector<double> resolve_init(const Scenario& sc) {
  const std::size_t d = objective_dim(sc.objective);
  if (!sc.init.empty()) {
    if (sc.init.size() != d)
      throw dimension_error("scenario init length does not match objective");
    return sc.init;
  }
  if (std::holds_alternative<Landscape2D>(sc.objective)) {
    const auto s = default_start(std::get<Landscape2D>(sc.objective));
    return {s[0], s[1]};
  }
  if (std::holds_alternative<ModelTask>(sc.objective))
    return std::vector<double>(d, 0.0);
  Rng rng(derive_seed(sc.seed, detail::kInitTag));
  return {rng.uniform(-1.0, 1.0)};
}

// Per-step time series of one episode. Wall time is kept as a scalar and is
// never serialized, so identical scenarios reproduce identical files.
struct RunRecord {
  Scenario scenario;  // with the resolved init
  std::vector<double> loss;
  std::vector<double> regret;  // instantaneous
  std::vector<double> cum_regret;
  std::vector<double> alignment;
  std::vector<double> masked_fraction;
  std::vector<double> trajectory;  // row-major steps x traj_dim, the
                                   // post-update iterate of each round
  std::size_t traj_dim = 0;
  std::vector<double> opt_path;  // x*(t) per step (moving minimum only)
  std::vector<double> final_params;
  double final_auc = std::numeric_limits<double>::quiet_NaN();
  double wall_time_sec = 0.0;
  std::int64_t steps_completed = 0;
  bool tracking_regret = false;  // regret vs moving minimizer, not fixed
  bool diverged = false;
  std::string error;
};

struct diverged_error : std::runtime_error {
  RunRecord partial;
  diverged_error(const std::string& msg, RunRecord rec)
      : std::runtime_error(msg), partial(std::move(rec)) {
    partial.diverged = true;
    partial.error = msg;
  }
};

namespace detail {

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

// Comparator for the convex |a(x-c)| stream: the exact weighted median of
// the presampled centers minimizes the summed loss.
inline double weighted_median(std::vector<std::pair<double, double>> cw) {
  std::sort(cw.begin(), cw.end());
  double total = 0.0;
  for (const auto& [c, w] : cw) total += w;
  double acc = 0.0;
  for (const auto& [c, w] : cw) {
    acc += w;
    if (acc >= 0.5 * total) return c;
  }
  return cw.back().first;
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

// Runs one episode: at each step t = 1..horizon the gradient of f_t at the
// incoming iterate is (optionally corrupted and) fed to the optimizer, and
// the resulting iterate is scored against f_t. Deterministic given the
// scenario. A non-finite loss or parameter aborts with diverged_error
// carrying the partial record.
inline RunRecord run_episode(const Scenario& sc) {
  if (sc.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  sc.hp.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = objective_dim(sc.objective);
  std::vector<double> params = resolve_init(sc);

  RunRecord rec;
  rec.scenario = sc;
  rec.scenario.init = params;
  const bool record_traj = sc.record_trajectory && d <= 4;
  rec.traj_dim = record_traj ? d : 0;

  OptimState state = init_state(d, sc.hp);
  std::optional<Rng> noise_rng;
  if (sc.noise)
    noise_rng.emplace(derive_seed(sc.noise->seed, sc.seed));

  // Convex stream: presample coefficients and fix the comparator.
  std::vector<double> cs_slope, cs_center;
  double cs_opt = 0.0;
  if (const auto* cs = std::get_if<ConvexAbsStream>(&sc.objective)) {
    Rng rng(derive_seed(sc.seed, detail::kConvexTag));
    cs_slope.resize(static_cast<std::size_t>(sc.horizon));
    cs_center.resize(static_cast<std::size_t>(sc.horizon));
    std::vector<std::pair<double, double>> cw(cs_slope.size());
    for (std::size_t i = 0; i < cs_slope.size(); ++i) {
      cs_slope[i] = rng.uniform(cs->slope_lo, cs->slope_hi);
      cs_center[i] = rng.uniform(cs->center_lo, cs->center_hi);
      cw[i] = {cs_center[i], cs_slope[i]};
    }
    cs_opt = detail::weighted_median(std::move(cw));
  }

  const ModelTask* task = std::get_if<ModelTask>(&sc.objective);
  ClickStreamSpec eff_stream;
  if (task) {
    if (sc.horizon > task->stream.n_steps)
      throw std::invalid_argument("horizon exceeds stream length");
    // Mix the run seed into the stream seed: data varies across run seeds
    // but stays identical across the optimizer arms of a comparison.
    eff_stream = task->stream;
    eff_stream.seed = derive_seed(eff_stream.seed, sc.seed);
  }
  std::vector<double> pooled_scores;
  std::vector<int> pooled_labels;

  rec.tracking_regret = std::holds_alternative<MovingMinSpec>(sc.objective) ||
                        task != nullptr;

  const auto diverge = [&](const std::string& what) {
    rec.final_params = params;
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    throw diverged_error("run diverged at step " +
                             std::to_string(rec.steps_completed + 1) + ": " +
                             what,
                         rec);
  };

  // Round t: the gradient of f_t is taken at the incoming iterate, the
  // optimizer steps to theta_t, and the recorded loss/regret score theta_t
  // against the same f_t. The convex stream is the exception: it is scored
  // at the incoming iterate (the online-learning protocol behind the regret
  // bound forbids reacting to f_t before being charged for it). Model tasks
  // additionally pool their pre-update predictions for prequential
  // evaluation.
  const bool score_pre_update =
      std::holds_alternative<ConvexAbsStream>(sc.objective);
  std::optional<Batch> batch;
  const auto eval_loss = [&](std::int64_t t,
                             const std::vector<double>& at) -> double {
    if (const auto* mm = std::get_if<MovingMinSpec>(&sc.objective))
      return moving_loss_grad(*mm, at[0], t).loss;
    if (const auto* ls = std::get_if<Landscape2D>(&sc.objective))
      return eval2d(*ls, at[0], at[1]).loss;
    if (std::holds_alternative<ConvexAbsStream>(sc.objective)) {
      const auto i = static_cast<std::size_t>(t - 1);
      return abs_loss_grad(cs_slope[i], cs_center[i], at[0]).loss;
    }
    return model_loss_grad(*task, at, batch->examples, batch->noisy_labels)
        .mean_loss;
  };

  double cum_regret = 0.0;
  for (std::int64_t t = 1; t <= sc.horizon; ++t) {
    double ref = 0.0, pre_loss = 0.0;
    std::vector<double> grad(d, 0.0);
    bool sparse_route = false;

    if (const auto* mm = std::get_if<MovingMinSpec>(&sc.objective)) {
      grad[0] = moving_loss_grad(*mm, params[0], t).grad;
      rec.opt_path.push_back(x_star(*mm, t));
    } else if (const auto* ls = std::get_if<Landscape2D>(&sc.objective)) {
      const auto lg = eval2d(*ls, params[0], params[1]);
      grad[0] = lg.grad[0];
      grad[1] = lg.grad[1];
    } else if (std::holds_alternative<ConvexAbsStream>(sc.objective)) {
      const auto i = static_cast<std::size_t>(t - 1);
      const auto lg = abs_loss_grad(cs_slope[i], cs_center[i], params[0]);
      grad[0] = lg.grad;
      pre_loss = lg.loss;
      ref = abs_loss_grad(cs_slope[i], cs_center[i], cs_opt).loss;
    } else {
      batch = next_batch(eff_stream, t - 1);
      const ModelEval eval =
          model_loss_grad(*task, params, batch->examples, batch->noisy_labels);
      grad = eval.grad;
      // prequential: score before training on this batch
      pooled_scores.insert(pooled_scores.end(), eval.scores.begin(),
                           eval.scores.end());
      pooled_labels.insert(pooled_labels.end(), batch->clean_labels.begin(),
                           batch->clean_labels.end());
      // reference: the generating weights scored on the same labels
      double dummy = 0.0;
      for (std::size_t e = 0; e < batch->examples.size(); ++e) {
        double s = eff_stream.base_logit;
        for (std::int32_t i : batch->examples[e].indices)
          s += batch->true_weights[static_cast<std::size_t>(i)];
        ref += detail::loss_and_dscore(
            task->loss, s, static_cast<double>(batch->noisy_labels[e]), dummy);
      }
      ref /= static_cast<double>(batch->examples.size());
      sparse_route = task->model != ModelKind::Mlp;
    }

    for (double g : grad)
      if (!std::isfinite(g)) diverge("non-finite gradient");
    if (noise_rng) grad = corrupt_grad(grad, *sc.noise, *noise_rng);

    StepReport rep;
    try {
      if (sparse_route) {
        rep = sparse_step(state, params, sparse_from_dense(grad), sc.hp);
      } else {
        rep = dense_step(state, params, grad, sc.hp);
      }
    } catch (const nonfinite_error& e) {
      diverge(e.what());
    }
    if (!detail::all_finite(params)) diverge("non-finite parameter");

    const double loss = score_pre_update ? pre_loss : eval_loss(t, params);
    if (!std::isfinite(loss)) diverge("non-finite loss");

    if (record_traj)
      rec.trajectory.insert(rec.trajectory.end(), params.begin(),
                            params.end());
    rec.loss.push_back(loss);
    rec.regret.push_back(loss - ref);
    cum_regret += loss - ref;
    rec.cum_regret.push_back(cum_regret);
    rec.alignment.push_back(rep.alignment_ratio);
    rec.masked_fraction.push_back(rep.masked_fraction);
    rec.steps_completed = t;
  }

  rec.final_params = params;
  if (task && !pooled_labels.empty()) {
    const bool has_pos = std::find(pooled_labels.begin(), pooled_labels.end(),
                                   1) != pooled_labels.end();
    const bool has_neg = std::find(pooled_labels.begin(), pooled_labels.end(),
                                   0) != pooled_labels.end();
    if (has_pos && has_neg) rec.final_auc = auc(pooled_scores, pooled_labels);
  }
  rec.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

struct ComparisonRow {
  Algorithm algorithm = Algorithm::Adam;
  int n_seeds = 0;
  int n_diverged = 0;
  double final_loss_mean = 0.0, final_loss_std = 0.0;
  double cum_regret_mean = 0.0, cum_regret_std = 0.0;
  double alignment_mean = 0.0;
  double auc_mean = std::numeric_limits<double>::quiet_NaN();
  double auc_std = std::numeric_limits<double>::quiet_NaN();
};

// Rows in algorithm order; records in (algorithm-major, seed-minor) order,
// including partial records of diverged episodes.
struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::vector<RunRecord> records;
};

// Runs every (algorithm x seed) episode of the shared scenario and reduces
// per-algorithm statistics. Episodes are independent; workers > 1 runs them
// on a small thread pool, merged by index so the result never depends on
// completion order.
inline ComparisonTable compare(const Scenario& base,
                               std::span<const Algorithm> algorithms,
                               std::span<const std::uint64_t> seeds,
                               int workers = 1) {
  if (algorithms.empty()) throw std::invalid_argument("no algorithms given");
  if (seeds.empty()) throw std::invalid_argument("no seeds given");

  const std::size_t n = algorithms.size() * seeds.size();
  std::vector<RunRecord> records(n);
  const auto run_one = [&](std::size_t idx) {
    Scenario sc = base;
    sc.hp.algorithm = algorithms[idx / seeds.size()];
    sc.seed = seeds[idx % seeds.size()];
    try {
      records[idx] = run_episode(sc);
    } catch (const diverged_error& e) {
      records[idx] = e.partial;
    }
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    pool.reserve(count);
    for (std::size_t w = 0; w < count; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          run_one(i);
      });
    for (auto& th : pool) th.join();
  }

  ComparisonTable table;
  table.records = std::move(records);
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    ComparisonRow row;
    row.algorithm = algorithms[a];
    row.n_seeds = static_cast<int>(seeds.size());
    std::vector<double> fl, cr, al, au;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const RunRecord& r = table.records[a * seeds.size() + s];
      if (r.diverged) {
        ++row.n_diverged;
        continue;
      }
      fl.push_back(r.loss.back());
      cr.push_back(r.cum_regret.back());
      al.push_back(detail::mean_of(r.alignment));
      if (std::isfinite(r.final_auc)) au.push_back(r.final_auc);
    }
    row.final_loss_mean = detail::mean_of(fl);
    row.final_loss_std = detail::sample_std(fl);
    row.cum_regret_mean = detail::mean_of(cr);
    row.cum_regret_std = detail::sample_std(cr);
    row.alignment_mean = detail::mean_of(al);
    if (!au.empty()) {
      row.auc_mean = detail::mean_of(au);
      row.auc_std = detail::sample_std(au);
    }
    table.rows.push_back(row);
  }
  return table;
}

struct RegretSlope {
  double slope = 0.0;
  std::int64_t t_begin = 0;  // fit window, 1-based inclusive
  std::int64_t t_end = 0;
};

// Least-squares slope of log R_t against log t over the second half of the
// run (the window is reported so outputs can document it). Non-positive
// cumulative regret values are clamped to 1e-12 before the logs.
inline RegretSlope regret_slope(const RunRecord& rec) {
  const auto n = static_cast<std::int64_t>(rec.cum_regret.size());
  if (n < 100)
    throw std::invalid_argument("regret_slope: needs horizon >= 100");
  RegretSlope out;
  out.t_begin = n / 2 + 1;
  out.t_end = n;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double count = static_cast<double>(out.t_end - out.t_begin + 1);
  for (std::int64_t t = out.t_begin; t <= out.t_end; ++t) {
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(
        std::max(rec.cum_regret[static_cast<std::size_t>(t - 1)], 1e-12));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return out;
}

}  // namespace cadam
