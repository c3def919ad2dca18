#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfmm/constraints.hpp"
#include "tfmm/model.hpp"
#include "tfmm/objective.hpp"
#include "tfmm/qcqp.hpp"
#include "tfmm/types.hpp"

namespace tfmm {

template <typename Scalar = double>
struct GaussianBelief {
  VectorX<Scalar> mean;
  MatrixX<Scalar> cov;
};

enum class SurrogateKind { Log, Smooth };

// Equivalent-Gaussian measurement variance at the accepted estimate: the
// residual-to-log ratio form, or the inverse surrogate weight 1/m_i.
enum class RVariant { LogRatio, InverseWeight };

// Feasibility tolerance in constraint natural units.
template <typename Scalar>
inline constexpr Scalar kFeasTol = Scalar(1e-7);

template <typename Scalar = double>
struct FilterConfig {
  SurrogateKind surrogate = SurrogateKind::Log;
  bool constrained = false;
  std::vector<Constraint<Scalar>> constraints;
  Scalar mm_tol = Scalar(1e-6);  // on ||x_{t+1} - x_t||_inf
  int mm_max_iter = 50;
  QcqpOptions<Scalar> qcqp;
  RVariant r_variant = RVariant::LogRatio;

  void validate(Index nx) const {
    if (!(mm_tol > 0)) throw std::invalid_argument("filter: mm_tol must be > 0");
    if (mm_max_iter < 1) throw std::invalid_argument("filter: mm_max_iter must be >= 1");
    if (constrained)
      for (const auto& c : constraints)
        if (c.dim() != nx) throw std::invalid_argument("filter: constraint dimension mismatch");
  }
};

template <typename Scalar = double>
struct FilterStep {
  GaussianBelief<Scalar> posterior;
  int mm_iterations = 0;
  Scalar objective_value = 0;       // F at the accepted estimate
  VectorX<Scalar> r_diag;           // equivalent measurement variances
  std::int64_t wall_ns = 0;
  Scalar constraint_residual = 0;   // max_j g_j at the estimate; 0 if unconstrained
  Scalar descent_gap_max = 0;       // max accepted F(x_{t+1}) - F(x_t); <= 0
};

template <typename Scalar = double>
struct FilterTrace {
  std::vector<FilterStep<Scalar>> steps;

  Index size() const { return static_cast<Index>(steps.size()); }
};

class FilterStepError : public std::runtime_error {
 public:
  FilterStepError(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

template <typename Scalar>
GaussianBelief<Scalar> predict(const StateSpaceModel<Scalar>& model,
                               const GaussianBelief<Scalar>& post) {
  GaussianBelief<Scalar> prior;
  prior.mean = model.A * post.mean;
  prior.cov = symmetrized<Scalar>(model.A * post.cov * model.A.transpose() + model.Q);
  return prior;
}

// Inverse of a posterior/prior covariance; a ridge of 1e-10 tr(P)/n guards
// condition numbers beyond 1e12.
template <typename Scalar>
MatrixX<Scalar> prior_precision(const MatrixX<Scalar>& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(cov);
  const VectorX<Scalar> d = es.eigenvalues();
  const Scalar dmax = d.maxCoeff();
  if (d.minCoeff() > 0 && dmax / d.minCoeff() <= Scalar(1e12)) {
    return es.eigenvectors() * d.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  }
  Scalar ridge = Scalar(1e-10) * cov.trace() / static_cast<Scalar>(cov.rows());
  if (!(ridge > 0)) ridge = Scalar(1e-10);
  const MatrixX<Scalar> guarded =
      cov + ridge * MatrixX<Scalar>::Identity(cov.rows(), cov.cols());
  return symmetrized<Scalar>(guarded.llt().solve(
      MatrixX<Scalar>::Identity(cov.rows(), cov.cols())));
}

template <typename Scalar>
MapObjective<Scalar> make_map_objective(const StateSpaceModel<Scalar>& model,
                                        const GaussianBelief<Scalar>& prior,
                                        const ConstVecRef<Scalar>& y) {
  MapObjective<Scalar> obj;
  obj.prior_mean = prior.mean;
  obj.prior_precision = prior_precision<Scalar>(prior.cov);
  obj.C = model.C;
  obj.y = y;
  obj.sigma = model.sigma;
  obj.nu = model.nu;
  return obj;
}

// Cyclic projection repair for an infeasible start point.
template <typename Scalar>
VectorX<Scalar> repair_feasible(const std::vector<Constraint<Scalar>>& constraints,
                                VectorX<Scalar> x) {
  for (int pass = 0; pass < 16; ++pass) {
    bool all_ok = true;
    for (const auto& c : constraints) {
      if (eval_g(c, x) > kFeasTol<Scalar>) {
        x = project_feasible(c, x);
        all_ok = false;
      }
    }
    if (all_ok) return x;
  }
  for (const auto& c : constraints)
    if (eval_g(c, x) > kFeasTol<Scalar>)
      throw std::runtime_error("infeasible start could not be repaired by projection");
  return x;
}

template <typename Scalar = double>
struct MmResult {
  VectorX<Scalar> x;
  int iterations = 0;
  std::vector<Scalar> objective_history;  // F at x^0, x^1, ...; nonincreasing
  Scalar descent_gap_max = 0;             // max F(x_{t+1}) - F(x_t) over accepted steps
};

// Majorize-minimize loop on a MAP objective under the given constraints.
// Starts at the prior mean (projected to feasibility if needed); each round
// minimizes the chosen quadratic surrogate subject to the majorized
// constraints. A candidate that fails to decrease F (possible only within the
// subproblem solver tolerance of a fixed point) is rejected and ends the loop,
// so the accepted sequence is monotone by construction.
template <typename Scalar>
MmResult<Scalar> mm_minimize(const MapObjective<Scalar>& obj,
                             const std::vector<Constraint<Scalar>>& constraints,
                             const FilterConfig<Scalar>& cfg) {
  MmResult<Scalar> res;
  VectorX<Scalar> x = obj.prior_mean;

  std::vector<const Constraint<Scalar>*> ineqs;
  std::vector<std::pair<VectorX<Scalar>, Scalar>> eqs;
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::LinearEq) {
      eqs.emplace_back(c.q, -c.r);  // a'x = b held by elimination in the solver
    } else {
      ineqs.push_back(&c);
    }
  }
  if (!constraints.empty()) x = repair_feasible(constraints, x);

  res.objective_history.push_back(eval_F(obj, x));
  for (int t = 0; t < cfg.mm_max_iter; ++t) {
    const QuadraticSurrogate<Scalar> surrogate = cfg.surrogate == SurrogateKind::Log
                                                     ? build_surrogate_log(obj, x)
                                                     : build_surrogate_smooth(obj, x);
    VectorX<Scalar> next;
    if (ineqs.empty() && eqs.empty()) {
      next = solve_unconstrained(surrogate);
    } else {
      QcqpProblem<Scalar> sub;
      sub.objective = surrogate;
      sub.constraints.reserve(ineqs.size());
      for (const auto* c : ineqs) sub.constraints.push_back(majorize_g(*c, x));
      sub.equalities = eqs;
      const QcqpSolution<Scalar> sol = solve(sub, cfg.qcqp, x);
      if (sol.status == QcqpStatus::Infeasible)
        throw std::runtime_error("QCQP subproblem infeasible");
      if (sol.status == QcqpStatus::MaxIter)
        throw std::runtime_error("QCQP subproblem hit the iteration budget");
      next = sol.x_star;
    }

    const Scalar f_cur = res.objective_history.back();
    const Scalar f_next = eval_F(obj, next);
    if (f_next > f_cur) break;
    const Scalar step = (next - x).cwiseAbs().maxCoeff();
    if (res.iterations == 0 || f_next - f_cur > res.descent_gap_max)
      res.descent_gap_max = f_next - f_cur;
    x = std::move(next);
    ++res.iterations;
    res.objective_history.push_back(f_next);
    if (step <= cfg.mm_tol) break;
  }
  res.x = std::move(x);
  return res;
}

template <typename Scalar>
MmResult<Scalar> mm_update(const StateSpaceModel<Scalar>& model,
                           const GaussianBelief<Scalar>& prior, const ConstVecRef<Scalar>& y,
                           const FilterConfig<Scalar>& cfg) {
  const MapObjective<Scalar> obj = make_map_objective(model, prior, y);
  static const std::vector<Constraint<Scalar>> kNone;
  return mm_minimize(obj, cfg.constrained ? cfg.constraints : kNone, cfg);
}

// Per-channel equivalent Gaussian variance at the accepted estimate. The
// LogRatio form is w^2 / ((1+nu) log(1 + w^2/(sigma^2 nu))) with its analytic
// limit sigma^2 nu / (1+nu) below |w| = 1e-8 sigma.
template <typename Scalar>
VectorX<Scalar> adaptive_R(const StateSpaceModel<Scalar>& model, const ConstVecRef<Scalar>& x_hat,
                           const ConstVecRef<Scalar>& y,
                           RVariant variant = RVariant::LogRatio) {
  const Index ny = model.measurement_dim();
  VectorX<Scalar> r(ny);
  for (Index i = 0; i < ny; ++i) {
    const Scalar w = model.C.row(i).dot(x_hat) - y[i];
    const Scalar sigma = model.sigma[i], nu = model.nu[i];
    if (variant == RVariant::InverseWeight) {
      r[i] = (nu * sigma * sigma + w * w) / (1 + nu);
    } else if (std::abs(w) < Scalar(1e-8) * sigma) {
      r[i] = sigma * sigma * nu / (1 + nu);
    } else {
      r[i] = w * w / ((1 + nu) * std::log1p(w * w / (sigma * sigma * nu)));
    }
  }
  return r;
}

// Gain and covariance: K = P C' (C P C' + R)^{-1}, P_post = P - K C P,
// symmetrized. The mean is passed through untouched.
template <typename Scalar>
GaussianBelief<Scalar> covariance_update(const GaussianBelief<Scalar>& prior,
                                         const ConstMatRef<Scalar>& C,
                                         const ConstVecRef<Scalar>& r_diag) {
  const MatrixX<Scalar> cp = C * prior.cov;
  MatrixX<Scalar> s = cp * C.transpose();
  s.diagonal() += r_diag;
  Eigen::LLT<MatrixX<Scalar>> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("singular innovation covariance");
  const MatrixX<Scalar> k = llt.solve(cp).transpose();
  GaussianBelief<Scalar> post;
  post.mean = prior.mean;
  post.cov = symmetrized<Scalar>(prior.cov - k * cp);
  return post;
}

namespace detail {

inline std::int64_t elapsed_ns(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                              t0)
      .count();
}

template <typename Scalar>
Scalar max_constraint_residual(const std::vector<Constraint<Scalar>>& cs,
                               const VectorX<Scalar>& x) {
  Scalar worst = 0;
  for (const auto& c : cs) worst = std::max(worst, eval_g(c, x));
  return worst;
}

}  // namespace detail

// Full filter: predict, MM measurement update, equivalent-noise covariance
// update, per step. (x0_mean, P0) is the prior on x_1, matching the model's
// initial-state law, so the first step runs no prediction. Step indices in
// errors are 1-based.
template <typename Scalar>
FilterTrace<Scalar> run_filter(const StateSpaceModel<Scalar>& model,
                               const FilterConfig<Scalar>& cfg,
                               const std::vector<VectorX<Scalar>>& measurements) {
  model.validate();
  cfg.validate(model.state_dim());
  if (measurements.empty()) throw std::invalid_argument("run_filter: measurements empty");

  FilterTrace<Scalar> trace;
  trace.steps.reserve(measurements.size());
  GaussianBelief<Scalar> belief{model.x0_mean, model.P0};

  for (std::size_t k = 0; k < measurements.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    FilterStep<Scalar> step;
    try {
      const GaussianBelief<Scalar> prior = k == 0 ? belief : predict(model, belief);
      MmResult<Scalar> mm = mm_update(model, prior, measurements[k], cfg);
      step.r_diag = adaptive_R(model, mm.x, measurements[k], cfg.r_variant);
      belief = covariance_update(prior, model.C, step.r_diag);
      belief.mean = std::move(mm.x);
      step.mm_iterations = mm.iterations;
      step.objective_value = mm.objective_history.back();
      step.descent_gap_max = mm.descent_gap_max;
    } catch (const std::exception& e) {
      throw FilterStepError(static_cast<int>(k) + 1, e.what());
    }
    step.posterior = belief;
    step.constraint_residual =
        cfg.constrained ? detail::max_constraint_residual(cfg.constraints, belief.mean)
                        : Scalar(0);
    step.wall_ns = detail::elapsed_ns(t0);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

// Textbook Kalman filter with fixed per-channel measurement variances; the
// recorded objective is the Gaussian MAP value at the posterior mean.
template <typename Scalar>
FilterTrace<Scalar> kalman_baseline(const StateSpaceModel<Scalar>& model,
                                    const ConstVecRef<Scalar>& r_diag,
                                    const std::vector<VectorX<Scalar>>& measurements) {
  model.validate();
  if (r_diag.size() != model.measurement_dim())
    throw std::invalid_argument("kalman_baseline: r_diag size mismatch");

  FilterTrace<Scalar> trace;
  trace.steps.reserve(measurements.size());
  GaussianBelief<Scalar> belief{model.x0_mean, model.P0};
  const VectorX<Scalar> r = r_diag;

  for (std::size_t k = 0; k < measurements.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    FilterStep<Scalar> step;
    try {
      const GaussianBelief<Scalar> prior = k == 0 ? belief : predict(model, belief);
      const MatrixX<Scalar> cp = model.C * prior.cov;
      MatrixX<Scalar> s = cp * model.C.transpose();
      s.diagonal() += r;
      Eigen::LLT<MatrixX<Scalar>> llt(s);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("singular innovation covariance");
      const MatrixX<Scalar> gain = llt.solve(cp).transpose();
      const VectorX<Scalar> innovation = measurements[k] - model.C * prior.mean;
      belief.mean = prior.mean + gain * innovation;
      belief.cov = symmetrized<Scalar>(prior.cov - gain * cp);

      const VectorX<Scalar> d = belief.mean - prior.mean;
      const VectorX<Scalar> w = model.C * belief.mean - measurements[k];
      step.objective_value = d.dot(prior_precision<Scalar>(prior.cov) * d);
      for (Index i = 0; i < r.size(); ++i)
        if (r[i] > 0) step.objective_value += w[i] * w[i] / r[i];
    } catch (const std::exception& e) {
      throw FilterStepError(static_cast<int>(k) + 1, e.what());
    }
    step.posterior = belief;
    step.r_diag = r;
    step.wall_ns = detail::elapsed_ns(t0);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

// Projection baseline: run the unconstrained filter, then project each
// posterior mean onto the constraint set in the P^{-1} metric through the same
// MM machinery (measurement-free objective). Covariances pass through.
template <typename Scalar>
FilterTrace<Scalar> projection_baseline(const StateSpaceModel<Scalar>& model,
                                        const std::vector<Constraint<Scalar>>& constraints,
                                        const std::vector<VectorX<Scalar>>& measurements,
                                        FilterConfig<Scalar> cfg = {}) {
  cfg.constrained = false;
  FilterTrace<Scalar> base = run_filter(model, cfg, measurements);

  FilterTrace<Scalar> trace;
  trace.steps.reserve(base.steps.size());
  for (std::size_t k = 0; k < base.steps.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    FilterStep<Scalar> step = base.steps[k];
    try {
      MapObjective<Scalar> obj;
      obj.prior_mean = step.posterior.mean;
      obj.prior_precision = prior_precision<Scalar>(step.posterior.cov);
      obj.C = MatrixX<Scalar>(0, model.state_dim());
      obj.y = VectorX<Scalar>(0);
      obj.sigma = VectorX<Scalar>(0);
      obj.nu = VectorX<Scalar>(0);
      const MmResult<Scalar> mm = mm_minimize(obj, constraints, cfg);
      step.posterior.mean = mm.x;
      step.mm_iterations += mm.iterations;
      step.objective_value = mm.objective_history.back();
      if (mm.descent_gap_max > step.descent_gap_max)
        step.descent_gap_max = mm.descent_gap_max;
    } catch (const std::exception& e) {
      throw FilterStepError(static_cast<int>(k) + 1, e.what());
    }
    step.constraint_residual = detail::max_constraint_residual(constraints, step.posterior.mean);
    step.wall_ns += detail::elapsed_ns(t0);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

// Bootstrap particle filter with systematic resampling; weighted mean and
// covariance are taken before the resampling step.
template <typename Scalar>
FilterTrace<Scalar> particle_filter_oracle(const StateSpaceModel<Scalar>& model,
                                           const std::vector<VectorX<Scalar>>& measurements,
                                           int n_particles, std::uint64_t seed) {
  model.validate();
  if (n_particles < 100)
    throw std::invalid_argument("particle_filter_oracle: need at least 100 particles");

  const Index nx = model.state_dim();
  const Index ny = model.measurement_dim();
  const Index n = n_particles;
  const MatrixX<Scalar> sqrt_p0 = psd_sqrt<Scalar>(model.P0);
  const MatrixX<Scalar> sqrt_q = psd_sqrt<Scalar>(model.Q);
  Rng<Scalar> rng(seed, 2);

  // Per-channel log-density constants of the measurement noise.
  VectorX<Scalar> log_norm(ny);
  for (Index i = 0; i < ny; ++i) {
    const Scalar nu = model.nu[i];
    log_norm[i] = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) -
                  Scalar(0.5) * std::log(std::numbers::pi_v<Scalar> * nu) -
                  std::log(model.sigma[i]);
  }

  MatrixX<Scalar> particles(nx, n);
  for (Index p = 0; p < n; ++p)
    particles.col(p) = model.x0_mean + sqrt_p0 * rng.gaussian_vector(nx);
  MatrixX<Scalar> propagated(nx, n), resampled(nx, n);
  VectorX<Scalar> logw(n), weights(n);

  FilterTrace<Scalar> trace;
  trace.steps.reserve(measurements.size());

  for (std::size_t k = 0; k < measurements.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    if (k > 0) {
      for (Index p = 0; p < n; ++p)
        propagated.col(p) = model.A * particles.col(p) + sqrt_q * rng.gaussian_vector(nx);
      particles.swap(propagated);
    }

    const VectorX<Scalar>& y = measurements[k];
    for (Index p = 0; p < n; ++p) {
      Scalar lw = 0;
      for (Index i = 0; i < ny; ++i) {
        const Scalar v = (y[i] - model.C.row(i).dot(particles.col(p))) / model.sigma[i];
        lw += log_norm[i] - (model.nu[i] + 1) / 2 * std::log1p(v * v / model.nu[i]);
      }
      logw[p] = lw;
    }
    const Scalar lw_max = logw.maxCoeff();
    weights = (logw.array() - lw_max).exp();
    const Scalar total = weights.sum();
    if (!(total > 0) || !std::isfinite(total))
      throw FilterStepError(static_cast<int>(k) + 1, "particle weight collapse");
    weights /= total;

    FilterStep<Scalar> step;
    step.posterior.mean = particles * weights;
    const MatrixX<Scalar> centered = particles.colwise() - step.posterior.mean;
    step.posterior.cov = symmetrized<Scalar>(centered * weights.asDiagonal() *
                                             centered.transpose());
    step.r_diag = VectorX<Scalar>::Zero(ny);

    // Systematic resampling.
    const Scalar u0 = rng.uniform() / static_cast<Scalar>(n);
    Scalar cum = weights[0];
    Index src = 0;
    for (Index p = 0; p < n; ++p) {
      const Scalar target = u0 + static_cast<Scalar>(p) / static_cast<Scalar>(n);
      while (cum < target && src + 1 < n) cum += weights[++src];
      resampled.col(p) = particles.col(src);
    }
    particles.swap(resampled);

    step.wall_ns = detail::elapsed_ns(t0);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

}  // namespace tfmm
