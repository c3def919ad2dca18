#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tfmm/filter.hpp"
#include "tfmm/model.hpp"

namespace tfmm {

enum class Scenario { Exp1Rotation, Exp2CircularRoad, Custom };

// Law of the ground truth: the generative model itself, an exact
// constant-speed circle, or the kinematic model re-projected onto the circle.
enum class TruthMode { Model, Circle, CircleReprojected };

enum class FilterMethod { Tfmm, Kf, Pf, Projection };

struct FilterUnderTest {
  std::string name;
  FilterMethod method = FilterMethod::Tfmm;
  SurrogateKind surrogate = SurrogateKind::Log;
  bool constrained = false;
  int particles = 10000;
};

struct ExperimentSpec {
  Scenario scenario = Scenario::Custom;
  StateSpaceModel<double> model;
  MeasurementNoiseSpec<double> noise;
  std::vector<Constraint<double>> constraints;
  std::vector<FilterUnderTest> filters;
  int steps = 100;
  int runs = 1;
  std::uint64_t base_seed = 12345;
  TruthMode truth_mode = TruthMode::Model;
  double circle_radius = 0;
  double circle_speed = 0;
  std::vector<Index> position_indices;  // RMSE panel subsets; empty = full state only
  std::vector<Index> velocity_indices;
  double mm_tol = 1e-6;
  int mm_max_iter = 50;
  RVariant r_variant = RVariant::LogRatio;

  void validate() const {
    model.validate();
    noise.validate();
    if (noise.channels() != model.measurement_dim())
      throw std::invalid_argument("spec: noise channels must match measurement dim");
    if (steps < 1) throw std::invalid_argument("spec: steps must be >= 1");
    if (runs < 1) throw std::invalid_argument("spec: runs must be >= 1");
    if (filters.empty()) throw std::invalid_argument("spec: filter list must be nonempty");
    for (const auto& c : constraints)
      if (c.dim() != model.state_dim())
        throw std::invalid_argument("spec: constraint dimension mismatch");
    for (const auto& f : filters) {
      if (f.method == FilterMethod::Pf && f.particles < 100)
        throw std::invalid_argument("spec: particle filter needs >= 100 particles");
      if ((f.method == FilterMethod::Projection || (f.method == FilterMethod::Tfmm && f.constrained)) &&
          constraints.empty())
        throw std::invalid_argument("spec: constrained filter requires constraints");
    }
    if (truth_mode != TruthMode::Model) {
      if (!(circle_radius > 0) || !(circle_speed > 0))
        throw std::invalid_argument("spec: circle truth needs radius and speed > 0");
      if (position_indices.size() != 2)
        throw std::invalid_argument("spec: circle truth needs two position indices");
    }
    auto check_idx = [&](const std::vector<Index>& idx) {
      for (Index i : idx)
        if (i < 0 || i >= model.state_dim())
          throw std::invalid_argument("spec: RMSE index out of range");
    };
    check_idx(position_indices);
    check_idx(velocity_indices);
  }

  FilterConfig<double> filter_config(const FilterUnderTest& f) const {
    FilterConfig<double> cfg;
    cfg.surrogate = f.surrogate;
    cfg.constrained = f.method == FilterMethod::Tfmm && f.constrained;
    if (cfg.constrained) cfg.constraints = constraints;
    cfg.mm_tol = mm_tol;
    cfg.mm_max_iter = mm_max_iter;
    cfg.r_variant = r_variant;
    return cfg;
  }
};

// Root mean squared Euclidean error over an optional coordinate subset.
inline double rmse(const std::vector<Eigen::VectorXd>& estimates,
                   const std::vector<Eigen::VectorXd>& truth,
                   const std::vector<Index>* subset = nullptr) {
  if (estimates.size() != truth.size())
    throw std::invalid_argument("rmse: length mismatch");
  if (estimates.empty()) throw std::invalid_argument("rmse: empty sequences");
  double total = 0;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    if (subset) {
      for (Index i : *subset) {
        const double d = estimates[k][i] - truth[k][i];
        total += d * d;
      }
    } else {
      total += (estimates[k] - truth[k]).squaredNorm();
    }
  }
  return std::sqrt(total / static_cast<double>(estimates.size()));
}

// Ground truth plus measurements for one Monte-Carlo run.
inline Trajectory<double> make_truth(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.truth_mode == TruthMode::Model)
    return simulate(spec.model, spec.noise, spec.steps, seed);

  const Index nx = spec.model.state_dim();
  const Index ny = spec.model.measurement_dim();
  const Index px = spec.position_indices[0], py = spec.position_indices[1];
  const double r = spec.circle_radius, v = spec.circle_speed;

  // Heading and turn direction from the initial state.
  const double theta0 = std::atan2(spec.model.x0_mean[py], spec.model.x0_mean[px]);
  double omega = v / r;
  if (spec.velocity_indices.size() == 2) {
    const double cross = spec.model.x0_mean[px] * spec.model.x0_mean[spec.velocity_indices[1]] -
                         spec.model.x0_mean[py] * spec.model.x0_mean[spec.velocity_indices[0]];
    if (cross < 0) omega = -omega;
  }

  auto circle_state = [&](double theta) {
    VectorX<double> x = VectorX<double>::Zero(nx);
    x[px] = r * std::cos(theta);
    x[py] = r * std::sin(theta);
    if (spec.velocity_indices.size() == 2) {
      x[spec.velocity_indices[0]] = -r * omega * std::sin(theta);
      x[spec.velocity_indices[1]] = r * omega * std::cos(theta);
    }
    return x;
  };

  Rng<double> state_rng(seed, 0);
  Rng<double> meas_rng(seed, 1);
  const MatrixX<double> sqrt_q = psd_sqrt<double>(spec.model.Q);

  Trajectory<double> traj;
  traj.states.reserve(spec.steps);
  traj.measurements.reserve(spec.steps);
  VectorX<double> x = spec.model.x0_mean;
  for (int k = 0; k < spec.steps; ++k) {
    if (k > 0) {
      if (spec.truth_mode == TruthMode::Circle) {
        x = circle_state(theta0 + omega * k);
      } else {
        // Kinematic step with process noise, re-projected onto the circle.
        x = spec.model.A * x + sqrt_q * state_rng.gaussian_vector(nx);
        const double rad = std::hypot(x[px], x[py]);
        if (rad > 0) {
          x[px] *= r / rad;
          x[py] *= r / rad;
        }
        if (spec.velocity_indices.size() == 2) {
          const Index vx = spec.velocity_indices[0], vy = spec.velocity_indices[1];
          const double speed = std::hypot(x[vx], x[vy]);
          if (speed > 0) {
            x[vx] *= v / speed;
            x[vy] *= v / speed;
          }
        }
      }
    }
    VectorX<double> y = spec.model.C * x;
    for (Index i = 0; i < ny; ++i) y[i] += spec.noise.draw(i, meas_rng);
    traj.states.push_back(x);
    traj.measurements.push_back(std::move(y));
  }
  return traj;
}

inline FilterTrace<double> run_one_filter(const ExperimentSpec& spec, const FilterUnderTest& f,
                                          const Trajectory<double>& traj, std::uint64_t seed) {
  switch (f.method) {
    case FilterMethod::Tfmm:
      return run_filter(spec.model, spec.filter_config(f), traj.measurements);
    case FilterMethod::Kf:
      return kalman_baseline(spec.model, spec.noise.variance(), traj.measurements);
    case FilterMethod::Pf:
      return particle_filter_oracle(spec.model, traj.measurements, f.particles, seed);
    case FilterMethod::Projection:
      return projection_baseline(spec.model, spec.constraints, traj.measurements,
                                 spec.filter_config(f));
  }
  throw std::logic_error("unknown filter method");
}

struct RunStats {
  std::uint64_t seed = 0;
  double rmse_full = std::numeric_limits<double>::quiet_NaN();
  double rmse_pos = std::numeric_limits<double>::quiet_NaN();
  double rmse_vel = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0;
  double max_constraint_residual = 0;
  double max_descent_gap = 0;
  double median_mm_iters = 0;
  bool failed = false;
  std::string error;
};

struct FilterReport {
  FilterUnderTest filter;
  std::vector<RunStats> runs;

  int failures() const {
    int n = 0;
    for (const auto& r : runs) n += r.failed;
    return n;
  }

  double mean_rmse(double RunStats::* field = &RunStats::rmse_full) const {
    double total = 0;
    int n = 0;
    for (const auto& r : runs)
      if (!r.failed) {
        total += r.*field;
        ++n;
      }
    return n > 0 ? total / n : std::numeric_limits<double>::quiet_NaN();
  }

  double std_rmse(double RunStats::* field = &RunStats::rmse_full) const {
    const double mean = mean_rmse(field);
    double total = 0;
    int n = 0;
    for (const auto& r : runs)
      if (!r.failed) {
        total += (r.*field - mean) * (r.*field - mean);
        ++n;
      }
    return n > 1 ? std::sqrt(total / (n - 1)) : 0.0;
  }

  double mean_seconds() const {
    double total = 0;
    int n = 0;
    for (const auto& r : runs)
      if (!r.failed) {
        total += r.seconds;
        ++n;
      }
    return n > 0 ? total / n : std::numeric_limits<double>::quiet_NaN();
  }
};

struct RmseReport {
  std::vector<FilterReport> filters;
  int total_runs = 0;

  double failed_fraction() const {
    int failed = 0, total = 0;
    for (const auto& f : filters) {
      failed += f.failures();
      total += static_cast<int>(f.runs.size());
    }
    return total > 0 ? static_cast<double>(failed) / total : 0.0;
  }
};

namespace detail {

inline RunStats evaluate_run(const ExperimentSpec& spec, const Trajectory<double>& traj,
                             const FilterTrace<double>& trace, std::uint64_t seed,
                             double seconds) {
  RunStats stats;
  stats.seed = seed;
  stats.seconds = seconds;
  std::vector<Eigen::VectorXd> estimates;
  estimates.reserve(trace.steps.size());
  std::vector<double> iters;
  iters.reserve(trace.steps.size());
  for (const auto& step : trace.steps) {
    estimates.push_back(step.posterior.mean);
    iters.push_back(static_cast<double>(step.mm_iterations));
    stats.max_constraint_residual =
        std::max(stats.max_constraint_residual, step.constraint_residual);
    stats.max_descent_gap = std::max(stats.max_descent_gap, step.descent_gap_max);
  }
  stats.rmse_full = rmse(estimates, traj.states);
  if (!spec.position_indices.empty())
    stats.rmse_pos = rmse(estimates, traj.states, &spec.position_indices);
  if (!spec.velocity_indices.empty())
    stats.rmse_vel = rmse(estimates, traj.states, &spec.velocity_indices);
  std::sort(iters.begin(), iters.end());
  stats.median_mm_iters = iters.empty() ? 0.0 : iters[iters.size() / 2];
  return stats;
}

}  // namespace detail

// Runs every filter on every seeded data set (seed = base_seed + run, shared
// across filters so comparisons are paired). Failed runs are recorded and
// excluded from aggregates.
inline RmseReport run_experiment(const ExperimentSpec& spec, int parallelism = 0) {
  spec.validate();
  if (parallelism <= 0)
    parallelism = std::max(1u, std::thread::hardware_concurrency());
  parallelism = std::min(parallelism, spec.runs);

  RmseReport report;
  report.total_runs = spec.runs;
  report.filters.resize(spec.filters.size());
  for (std::size_t f = 0; f < spec.filters.size(); ++f) {
    report.filters[f].filter = spec.filters[f];
    report.filters[f].runs.resize(spec.runs);
  }

  std::atomic<int> next_run{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (;;) {
      const int run = next_run.fetch_add(1);
      if (run >= spec.runs) return;
      const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(run);
      const Trajectory<double> traj = make_truth(spec, seed);
      for (std::size_t f = 0; f < spec.filters.size(); ++f) {
        RunStats stats;
        try {
          const auto t0 = std::chrono::steady_clock::now();
          const FilterTrace<double> trace = run_one_filter(spec, spec.filters[f], traj, seed);
          const double seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          stats = detail::evaluate_run(spec, traj, trace, seed, seconds);
        } catch (const std::exception& e) {
          stats.seed = seed;
          stats.failed = true;
          stats.error = e.what();
          std::lock_guard<std::mutex> lock(log_mutex);
          std::fprintf(stderr, "[bench] %s run %d failed: %s\n",
                       spec.filters[f].name.c_str(), run, e.what());
        }
        report.filters[f].runs[run] = std::move(stats);
      }
    }
  };

  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(parallelism);
    for (int t = 0; t < parallelism; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return report;
}

// Experiment 1: two-state rotation, contaminated-Gaussian measurement noise,
// Student-t filters with nu = 3 and scale matched to the contaminated variance.
inline ExperimentSpec build_exp1() {
  ExperimentSpec s;
  s.scenario = Scenario::Exp1Rotation;
  const double th = 0.2 * std::numbers::pi;
  s.model.A = MatrixX<double>{{std::cos(th), std::sin(th)}, {-std::sin(th), std::cos(th)}};
  s.model.C = MatrixX<double>::Identity(2, 2);
  s.model.Q = 0.1 * MatrixX<double>::Identity(2, 2);
  const double nu = 3.0;
  const double contaminated_var = 0.9 * 0.1 + 0.1 * 10.0;  // 1.09
  s.model.sigma = VectorX<double>::Constant(2, std::sqrt(contaminated_var * (nu - 2) / nu));
  s.model.nu = VectorX<double>::Constant(2, nu);
  s.model.x0_mean = VectorX<double>::Zero(2);
  s.model.P0 = MatrixX<double>::Identity(2, 2);
  s.noise = MeasurementNoiseSpec<double>::contaminated_gaussian(
      VectorX<double>::Constant(2, 0.1), VectorX<double>::Constant(2, 0.1),
      VectorX<double>::Constant(2, 10.0));
  s.steps = 1000;
  s.runs = 100;
  s.base_seed = 12345;
  s.filters = {
      {"TFMM-log", FilterMethod::Tfmm, SurrogateKind::Log, false, 0},
      {"TFMM-smooth", FilterMethod::Tfmm, SurrogateKind::Smooth, false, 0},
      {"KF", FilterMethod::Kf, SurrogateKind::Log, false, 0},
      {"PF", FilterMethod::Pf, SurrogateKind::Log, false, 10000},
  };
  return s;
}

// Experiment 2: ground vehicle on a circular road of radius 100 m at 4 m/s,
// second-order kinematic filter model, position annulus of half-width 0.1 m.
inline ExperimentSpec build_exp2() {
  ExperimentSpec s;
  s.scenario = Scenario::Exp2CircularRoad;
  const double dt = 1.0;
  s.model.A = MatrixX<double>{{1, dt, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, dt}, {0, 0, 0, 1}};
  MatrixX<double> gamma{{0.5 * dt * dt, 0}, {dt, 0}, {0, 0.5 * dt * dt}, {0, dt}};
  s.model.Q = 1.5 * gamma * gamma.transpose();
  s.model.C = MatrixX<double>{{1, 0, 0, 0}, {0, 0, 1, 0}};
  const double nu = 3.0;
  s.model.sigma = VectorX<double>::Constant(2, std::sqrt(1.09 * (nu - 2) / nu));
  s.model.nu = VectorX<double>::Constant(2, nu);
  s.model.x0_mean = VectorX<double>{{0.0, 4.0, 100.0, 0.0}};
  s.model.P0 = MatrixX<double>::Identity(4, 4);
  s.noise = MeasurementNoiseSpec<double>::student_t(s.model.sigma, s.model.nu);
  s.constraints = {Constraint<double>::annulus_outer(100.0, 0.1, {0, 2}, 4),
                   Constraint<double>::annulus_inner(100.0, 0.1, {0, 2}, 4)};
  s.steps = 35;
  s.runs = 50;
  s.base_seed = 67890;
  s.truth_mode = TruthMode::Circle;
  s.circle_radius = 100.0;
  s.circle_speed = 4.0;
  s.position_indices = {0, 2};
  s.velocity_indices = {1, 3};
  s.filters = {
      {"TFMM-constrained", FilterMethod::Tfmm, SurrogateKind::Log, true, 0},
      {"TFMM-unconstrained", FilterMethod::Tfmm, SurrogateKind::Log, false, 0},
      {"projection", FilterMethod::Projection, SurrogateKind::Log, false, 0},
  };
  return s;
}

}  // namespace tfmm
