#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tfmm/constraints.hpp"
#include "tfmm/objective.hpp"
#include "tfmm/types.hpp"

namespace tfmm {

enum class QcqpStatus { Optimal, Infeasible, MaxIter };

// Strongly convex QCQP: minimize 0.5 x'Hx + b'x + c subject to convex
// quadratic inequalities, optional per-coordinate bounds, and optional linear
// equalities a'x = b (handled by null-space elimination, not as inequality
// pairs, so phase 1 keeps a strict interior).
template <typename Scalar = double>
struct QcqpProblem {
  QuadraticSurrogate<Scalar> objective;
  std::vector<ConvexQuadConstraint<Scalar>> constraints;
  std::optional<std::pair<VectorX<Scalar>, VectorX<Scalar>>> domain_box;  // lower, upper
  std::vector<std::pair<VectorX<Scalar>, Scalar>> equalities;
};

template <typename Scalar = double>
struct QcqpSolution {
  VectorX<Scalar> x_star;
  VectorX<Scalar> multipliers;  // per inequality, problem order then box rows
  Scalar kkt_residual = 0;
  int iterations = 0;  // Newton steps across both phases
  QcqpStatus status = QcqpStatus::Optimal;
  // (mu, barrier merit) after each accepted Newton step; nonincreasing per mu block.
  std::vector<std::pair<Scalar, Scalar>> merit_history;
};

template <typename Scalar = double>
struct QcqpOptions {
  Scalar tol = Scalar(1e-8);       // KKT residual target
  Scalar feas_tol = Scalar(1e-8);  // primal feasibility slack
  int max_iter = 200;              // Newton-step budget
  Scalar mu0 = 1;                  // initial barrier weight
  Scalar mu_shrink = Scalar(0.1);  // schedule mu <- mu * mu_shrink
};

// Closed-form minimizer of a PD quadratic: x* = -H^{-1} b.
template <typename Scalar>
VectorX<Scalar> solve_unconstrained(const QuadraticSurrogate<Scalar>& obj) {
  Eigen::LLT<MatrixX<Scalar>> llt(obj.H);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("solve_unconstrained: H is not positive definite");
  VectorX<Scalar> x = llt.solve(-obj.b);
  const Scalar resid = (obj.H * x + obj.b).norm();
  if (resid > Scalar(1e-10) * (1 + obj.b.norm())) x = llt.solve(-obj.b - (obj.H * x + obj.b)) + x;
  return x;
}

namespace detail {

template <typename Scalar>
struct BarrierIneq {
  MatrixX<Scalar> M;
  VectorX<Scalar> q;
  Scalar r = 0;

  Scalar value(const VectorX<Scalar>& w) const { return w.dot(M * w) + q.dot(w) + r; }
  VectorX<Scalar> gradient(const VectorX<Scalar>& w) const { return 2 * (M * w) + q; }
};

// Centering + mu schedule for  0.5 w'Hw + b'w + mu sum_j -log(-g_j(w)).
// Requires a strictly feasible start. `early_stop`, when set, ends the solve as
// soon as the current iterate satisfies it (used by phase 1).
template <typename Scalar>
struct BarrierSolver {
  const MatrixX<Scalar>& H;
  const VectorX<Scalar>& b;
  const std::vector<BarrierIneq<Scalar>>& ineqs;
  QcqpOptions<Scalar> opts;
  std::vector<std::pair<Scalar, Scalar>>* merit_out = nullptr;
  std::function<bool(const VectorX<Scalar>&, Scalar)> early_stop;
  // Consulted once per completed centering with (w, mu, centered); returning
  // true ends the solve at w.
  std::function<bool(const VectorX<Scalar>&, Scalar, bool)> level_end;
  int center_cap = 15;

  int steps_used = 0;
  Scalar mu_final = 0;
  bool converged = false;
  bool stopped_early = false;

  Scalar barrier_value(const VectorX<Scalar>& w, Scalar mu) const {
    Scalar f = Scalar(0.5) * w.dot(H * w) + b.dot(w);
    for (const auto& g : ineqs) {
      const Scalar v = g.value(w);
      if (v >= 0) return std::numeric_limits<Scalar>::infinity();
      f -= mu * std::log(-v);
    }
    return f;
  }

  // Largest step along delta that stays strictly inside every constraint
  // (fraction-to-boundary rule; each g is quadratic in the step length).
  Scalar max_step(const VectorX<Scalar>& w, const VectorX<Scalar>& delta) const {
    Scalar alpha = 1;
    for (const auto& g : ineqs) {
      const Scalar ca = delta.dot(g.M * delta);
      const Scalar cb = delta.dot(g.gradient(w));
      const Scalar cc = g.value(w);
      Scalar root;
      if (ca <= 0) {
        if (cb <= 0) continue;
        root = -cc / cb;
      } else {
        root = (-cb + std::sqrt(cb * cb - 4 * ca * cc)) / (2 * ca);
      }
      alpha = std::min(alpha, Scalar(0.9) * root);
    }
    return alpha;
  }

  VectorX<Scalar> run(VectorX<Scalar> w) {
    const Scalar m = static_cast<Scalar>(ineqs.size());
    const Scalar grad_tol = opts.tol / 10;
    const Index n = w.size();
    VectorX<Scalar> grad(n), delta(n);
    MatrixX<Scalar> hess(n, n);

    for (Scalar mu = opts.mu0;; mu *= opts.mu_shrink) {
      // Intermediate centers only need to track the path; the final level
      // (the one ending the schedule) is centered as tightly as the constraint
      // values can be evaluated, with a step cap because the gradient norm
      // bottoms out on cancellation noise near active boundaries. The
      // multiplier refit in solve() absorbs that noise component. The gap
      // target sits a factor 20 below the KKT tolerance: the distance of the
      // central point from the optimum is of order mu, so the certificate
      // needs headroom under opts.tol.
      const bool final_level = m * mu < opts.tol / 20;
      const Scalar center_tol = final_level ? grad_tol : std::max(grad_tol, mu / 10);

      for (int center_steps = 0; center_steps < center_cap; ++center_steps) {
        if (early_stop && early_stop(w, mu)) {
          stopped_early = true;
          mu_final = mu;
          return w;
        }
        grad = H * w + b;
        hess = H;
        for (const auto& g : ineqs) {
          const Scalar v = g.value(w);
          const VectorX<Scalar> gg = g.gradient(w);
          grad += mu / (-v) * gg;
          hess += mu / (v * v) * (gg * gg.transpose()) + (mu / (-v)) * (2 * g.M);
        }
        if (grad.norm() <= center_tol) break;
        if (steps_used >= opts.max_iter) {
          mu_final = mu;
          return w;
        }

        Eigen::LLT<MatrixX<Scalar>> llt(hess);
        if (llt.info() == Eigen::Success) {
          delta = llt.solve(-grad);
        } else {
          delta = hess.ldlt().solve(-grad);
        }

        const Scalar slope = grad.dot(delta);
        const Scalar f0 = barrier_value(w, mu);
        Scalar alpha = max_step(w, delta);
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
          const VectorX<Scalar> cand = w + alpha * delta;
          if (barrier_value(cand, mu) <= f0 + Scalar(1e-4) * alpha * slope) {
            w = cand;
            accepted = true;
            break;
          }
          alpha /= 2;
        }
        ++steps_used;
        if (!accepted) break;  // stalled; treat the current point as centered
        if (merit_out) merit_out->emplace_back(mu, barrier_value(w, mu));
        if (alpha * delta.cwiseAbs().maxCoeff() <=
            Scalar(1e-14) * (1 + w.cwiseAbs().maxCoeff()))
          break;  // step at rounding level
      }
      if (level_end) {
        grad = H * w + b;
        for (const auto& g : ineqs) grad += mu / (-g.value(w)) * g.gradient(w);
        if (level_end(w, mu, grad.norm() <= center_tol * 2)) {
          stopped_early = true;
          mu_final = mu;
          return w;
        }
      }
      if (final_level) {
        mu_final = mu;
        converged = true;
        return w;
      }
      if (steps_used >= opts.max_iter) {
        mu_final = mu;
        return w;
      }
    }
  }
};

// Newton polish on the active-set KKT system
//   H x + b + sum_j lambda_j grad g_j(x) = 0,  g_j(x) = 0  (j active)
// from the barrier point; quadratic convergence wipes out the path-following
// floor. Returns true and overwrites (z, lambda) only when the polished pair
// is strictly feasible for the inactive set and certifies better.
template <typename Scalar>
bool kkt_polish(const MatrixX<Scalar>& H, const VectorX<Scalar>& b,
                const std::vector<BarrierIneq<Scalar>>& gs, VectorX<Scalar>& z,
                VectorX<Scalar>& lambda, const QcqpOptions<Scalar>& opts) {
  const Index n = z.size();
  std::vector<std::size_t> act;
  for (std::size_t j = 0; j < gs.size(); ++j)
    if (lambda[static_cast<Index>(j)] * (1 + gs[j].gradient(z).norm()) > opts.tol)
      act.push_back(j);
  if (act.empty()) return false;
  const Index m = static_cast<Index>(act.size());

  auto kkt_norm = [&](const VectorX<Scalar>& zc, const VectorX<Scalar>& lc) {
    VectorX<Scalar> r1 = H * zc + b;
    Scalar r2 = 0;
    for (Index k = 0; k < m; ++k) {
      r1 += lc[k] * gs[act[k]].gradient(zc);
      r2 = std::max(r2, std::abs(gs[act[k]].value(zc)));
    }
    return std::max(r1.norm(), r2);
  };

  VectorX<Scalar> zc = z;
  VectorX<Scalar> lc(m);
  for (Index k = 0; k < m; ++k) lc[k] = lambda[static_cast<Index>(act[k])];
  const Scalar before = kkt_norm(zc, lc);

  for (int it = 0; it < 3; ++it) {
    MatrixX<Scalar> jac = MatrixX<Scalar>::Zero(n + m, n + m);
    VectorX<Scalar> rhs(n + m);
    MatrixX<Scalar> hl = H;
    VectorX<Scalar> r1 = H * zc + b;
    for (Index k = 0; k < m; ++k) {
      const auto& g = gs[act[k]];
      const VectorX<Scalar> gg = g.gradient(zc);
      hl += 2 * lc[k] * g.M;
      r1 += lc[k] * gg;
      jac.block(0, n + k, n, 1) = gg;
      jac.block(n + k, 0, 1, n) = gg.transpose();
      rhs[n + k] = -g.value(zc);
    }
    jac.topLeftCorner(n, n) = hl;
    rhs.head(n) = -r1;
    const VectorX<Scalar> step = jac.fullPivLu().solve(rhs);
    if (!step.allFinite()) return false;
    zc += step.head(n);
    lc += step.tail(m);
  }

  for (Index k = 0; k < m; ++k)
    if (lc[k] < -opts.feas_tol) return false;
  for (std::size_t j = 0; j < gs.size(); ++j)
    if (gs[j].value(zc) > opts.feas_tol) return false;
  if (kkt_norm(zc, lc) >= before) return false;

  z = std::move(zc);
  for (Index k = 0; k < m; ++k) lambda[static_cast<Index>(act[k])] = std::max(Scalar(0), lc[k]);
  return true;
}

}  // namespace detail

template <typename Scalar>
QcqpSolution<Scalar> solve(const QcqpProblem<Scalar>& p, const QcqpOptions<Scalar>& opts = {},
                           std::optional<VectorX<std::type_identity_t<Scalar>>> x_init =
                               std::nullopt) {
  using detail::BarrierIneq;
  const Index n = p.objective.H.rows();
  QcqpSolution<Scalar> sol;

  // Inequality work list: problem constraints, then finite box rows.
  std::vector<BarrierIneq<Scalar>> full;
  full.reserve(p.constraints.size() + 2 * n);
  for (const auto& c : p.constraints) full.push_back({c.M, c.q, c.r});
  if (p.domain_box) {
    const auto& [lower, upper] = *p.domain_box;
    for (Index i = 0; i < n; ++i) {
      if (std::isfinite(lower[i])) {
        VectorX<Scalar> a = VectorX<Scalar>::Zero(n);
        a[i] = -1;
        full.push_back({MatrixX<Scalar>::Zero(n, n), a, lower[i]});
      }
      if (std::isfinite(upper[i])) {
        VectorX<Scalar> a = VectorX<Scalar>::Zero(n);
        a[i] = 1;
        full.push_back({MatrixX<Scalar>::Zero(n, n), a, -upper[i]});
      }
    }
  }

  // Null-space elimination of the equalities: x = x_p + N z.
  const Index me = static_cast<Index>(p.equalities.size());
  VectorX<Scalar> x_p = VectorX<Scalar>::Zero(n);
  MatrixX<Scalar> N = MatrixX<Scalar>::Identity(n, n);
  MatrixX<Scalar> A;
  if (me > 0) {
    A.resize(me, n);
    VectorX<Scalar> rhs(me);
    for (Index e = 0; e < me; ++e) {
      A.row(e) = p.equalities[e].first.transpose();
      rhs[e] = p.equalities[e].second;
    }
    x_p = A.completeOrthogonalDecomposition().solve(rhs);
    if ((A * x_p - rhs).cwiseAbs().maxCoeff() > Scalar(1e-9) * (1 + rhs.cwiseAbs().maxCoeff())) {
      sol.status = QcqpStatus::Infeasible;
      sol.x_star = x_p;
      return sol;
    }
    Eigen::FullPivLU<MatrixX<Scalar>> lu(A);
    const MatrixX<Scalar> kernel = lu.kernel();
    if (kernel.cols() == 1 && kernel.cwiseAbs().maxCoeff() == 0) {
      N.resize(n, 0);  // fully determined
    } else {
      Eigen::HouseholderQR<MatrixX<Scalar>> qr(kernel);
      N = MatrixX<Scalar>(qr.householderQ()).leftCols(kernel.cols());
    }
  }
  const Index nz = N.cols();

  // Refit multipliers by nonnegative least squares on stationarity. The
  // barrier estimate mu / (-g_j) carries the cancellation noise of g_j near
  // active boundaries; the refit removes the component along span{grad g_j}.
  auto refit_multipliers = [&](const VectorX<Scalar>& x, VectorX<Scalar> lambda) {
    const Index mc = static_cast<Index>(full.size());
    if (mc == 0) return lambda;
    MatrixX<Scalar> G(n, mc);
    for (Index j = 0; j < mc; ++j) G.col(j) = full[static_cast<std::size_t>(j)].gradient(x);
    const VectorX<Scalar> r0 = p.objective.H * x + p.objective.b;
    // Only constraints whose stationarity contribution is material enter the
    // refit; a noise-level multiplier on a far-inactive constraint would
    // fabricate a complementarity residual.
    std::vector<Index> support;
    for (Index j = 0; j < mc; ++j)
      if (lambda[j] * (1 + G.col(j).norm()) > opts.tol / 10) support.push_back(j);
    for (Index pass = 0; pass <= mc; ++pass) {
      MatrixX<Scalar> Gs(n, static_cast<Index>(support.size()));
      for (std::size_t k = 0; k < support.size(); ++k) Gs.col(static_cast<Index>(k)) = G.col(support[k]);
      VectorX<Scalar> ls = support.empty()
                               ? VectorX<Scalar>()
                               : VectorX<Scalar>(Gs.completeOrthogonalDecomposition().solve(-r0));
      Index worst = -1;
      Scalar worst_val = Scalar(-1e-12);
      for (std::size_t k = 0; k < support.size(); ++k)
        if (ls[static_cast<Index>(k)] < worst_val) {
          worst_val = ls[static_cast<Index>(k)];
          worst = static_cast<Index>(k);
        }
      if (worst < 0) {
        VectorX<Scalar> out = VectorX<Scalar>::Zero(mc);
        for (std::size_t k = 0; k < support.size(); ++k)
          out[support[k]] = std::max(Scalar(0), ls[static_cast<Index>(k)]);
        // Keep the refit only if it does not worsen stationarity.
        VectorX<Scalar> r_new = r0, r_old = r0;
        for (Index j = 0; j < mc; ++j) {
          r_new += out[j] * G.col(j);
          r_old += lambda[j] * G.col(j);
        }
        return r_new.norm() <= r_old.norm() ? out : lambda;
      }
      support.erase(support.begin() + worst);
    }
    return lambda;
  };

  auto finish = [&](const VectorX<Scalar>& x, const VectorX<Scalar>& lambda_in, bool centered) {
    sol.x_star = x;
    const VectorX<Scalar> lambda = refit_multipliers(x, lambda_in);
    sol.multipliers = lambda;
    VectorX<Scalar> r_stat = p.objective.H * x + p.objective.b;
    for (std::size_t j = 0; j < full.size(); ++j) r_stat += lambda[j] * full[j].gradient(x);
    Scalar eq_resid = 0;
    if (me > 0) {
      VectorX<Scalar> nu =
          (A * A.transpose()).ldlt().solve(-(A * r_stat));
      r_stat += A.transpose() * nu;
      for (Index e = 0; e < me; ++e)
        eq_resid = std::max(eq_resid, std::abs(A.row(e).dot(x) - p.equalities[e].second));
    }
    Scalar feas = 0, comp = 0;
    for (std::size_t j = 0; j < full.size(); ++j) {
      const Scalar v = full[j].value(x);
      feas = std::max(feas, v);
      comp = std::max(comp, std::abs(lambda[j] * v));
    }
    sol.kkt_residual = std::max({r_stat.norm(), feas, comp, eq_resid});
    sol.status = (centered && feas <= opts.feas_tol && sol.kkt_residual <= opts.tol)
                     ? QcqpStatus::Optimal
                     : QcqpStatus::MaxIter;
    return sol;
  };

  if (nz == 0) {
    return finish(x_p, VectorX<Scalar>::Zero(static_cast<Index>(full.size())), true);
  }

  // Reduced problem in z.
  MatrixX<Scalar> Hz = N.transpose() * p.objective.H * N;
  VectorX<Scalar> bz = N.transpose() * (p.objective.H * x_p + p.objective.b);
  std::vector<BarrierIneq<Scalar>> red;
  red.reserve(full.size());
  for (const auto& g : full) {
    BarrierIneq<Scalar> t;
    t.M = N.transpose() * g.M * N;
    t.q = N.transpose() * (2 * (g.M * x_p) + g.q);
    t.r = x_p.dot(g.M * x_p) + g.q.dot(x_p) + g.r;
    red.push_back(std::move(t));
  }

  Eigen::LLT<MatrixX<Scalar>> hz_llt(Hz);
  if (hz_llt.info() != Eigen::Success)
    throw std::invalid_argument("qcqp: objective Hessian is not positive definite");
  const VectorX<Scalar> z_uc = hz_llt.solve(-bz);

  if (red.empty()) {
    return finish(x_p + N * z_uc, VectorX<Scalar>::Zero(0), true);
  }

  auto max_violation = [&](const VectorX<Scalar>& z) {
    Scalar worst = -std::numeric_limits<Scalar>::infinity();
    for (const auto& g : red)
      worst = std::max(worst, g.value(z) / (1 + std::abs(g.r)));
    return worst;
  };

  // Cyclic projections over the reduced constraints; pulls a start point to
  // (or near) the feasible set so phase 1 has little work left.
  auto cyclic_project = [&](VectorX<Scalar> z) {
    for (int pass = 0; pass < 20; ++pass) {
      bool moved = false;
      for (const auto& g : red) {
        if (g.value(z) <= 0) continue;
        VectorX<Scalar> pz;
        if (g.M.cwiseAbs().maxCoeff() == 0) {
          pz = z - g.value(z) / g.q.squaredNorm() * g.q;
        } else if (!detail::secular_projection<Scalar>(g.M, g.q, g.r, z, pz)) {
          continue;
        }
        z = std::move(pz);
        moved = true;
      }
      if (!moved) break;
    }
    return z;
  };

  const Scalar strict_margin = Scalar(1e-10);

  // A strictly feasible unconstrained minimizer is the exact solution of the
  // convex problem; skip the barrier entirely.
  if (max_violation(z_uc) < -strict_margin) {
    return finish(x_p + N * z_uc, VectorX<Scalar>::Zero(static_cast<Index>(full.size())), true);
  }

  // Strictly feasible start: the caller hint, then cyclic projections, then a
  // phase-1 solve.
  VectorX<Scalar> z0;
  VectorX<Scalar> z_hint = x_init ? VectorX<Scalar>(N.transpose() * (*x_init - x_p)) : z_uc;
  int phase1_steps = 0;
  if (x_init && max_violation(z_hint) < -strict_margin) {
    z0 = z_hint;
  } else if (VectorX<Scalar> z_cyc = cyclic_project(z_hint); max_violation(z_cyc) < -strict_margin) {
    z0 = std::move(z_cyc);
  } else {
    z_hint = std::move(z_cyc);
    // Phase 1 over (z, s): minimize s + (delta/2)||z - z_hint||^2 with
    // g_j(z) <= s, started strictly feasible by construction from the
    // projected hint.
    const Scalar delta = Scalar(1e-6) * (1 + Hz.trace() / static_cast<Scalar>(nz));
    MatrixX<Scalar> H1 = MatrixX<Scalar>::Zero(nz + 1, nz + 1);
    H1.topLeftCorner(nz, nz) = delta * MatrixX<Scalar>::Identity(nz, nz);
    VectorX<Scalar> b1 = VectorX<Scalar>::Zero(nz + 1);
    b1.head(nz) = -delta * z_hint;
    b1[nz] = 1;
    std::vector<BarrierIneq<Scalar>> ph;
    ph.reserve(red.size());
    for (const auto& g : red) {
      BarrierIneq<Scalar> t;
      t.M = MatrixX<Scalar>::Zero(nz + 1, nz + 1);
      t.M.topLeftCorner(nz, nz) = g.M;
      t.q = VectorX<Scalar>(nz + 1);
      t.q.head(nz) = g.q;
      t.q[nz] = -1;
      t.r = g.r;
      ph.push_back(std::move(t));
    }
    detail::BarrierSolver<Scalar> phase1{H1, b1, ph, opts, nullptr, {}, {}};
    phase1.center_cap = 60;
    bool interior_found = false;
    const Scalar m1 = static_cast<Scalar>(ph.size());
    phase1.early_stop = [&](const VectorX<Scalar>& w, Scalar) {
      if (max_violation(w.head(nz)) < -strict_margin) {
        interior_found = true;
        return true;
      }
      return false;
    };
    // Duality-gap certificate, valid at a completed center: the phase-1
    // optimum cannot lie below s - m*mu, so a centered s well above the gap
    // means no strict interior exists (up to the small proximal term).
    phase1.level_end = [&](const VectorX<Scalar>& w, Scalar mu, bool centered) {
      const Scalar s_val = w[w.size() - 1];
      return centered && s_val - 10 * m1 * mu > 0 && m1 * mu < Scalar(0.01) * s_val;
    };
    VectorX<Scalar> w0(nz + 1);
    Scalar s0 = -std::numeric_limits<Scalar>::infinity();
    for (const auto& g : red) s0 = std::max(s0, g.value(z_hint));
    w0.head(nz) = z_hint;
    w0[nz] = s0 + 1;
    const VectorX<Scalar> w = phase1.run(w0);
    phase1_steps = phase1.steps_used;
    if (!interior_found) {
      sol.status = (phase1.converged || phase1.stopped_early) ? QcqpStatus::Infeasible
                                                              : QcqpStatus::MaxIter;
      sol.x_star = x_p + N * w.head(nz);
      sol.iterations = phase1_steps;
      return sol;
    }
    z0 = w.head(nz);
  }

  // Path following with adaptive depth: if the certificate misses the KKT
  // gate at the scheduled gap, resume one mu level deeper (geometry with large
  // constraint gradients amplifies the final-mu displacement).
  VectorX<Scalar> z = std::move(z0);
  int used = phase1_steps;
  Scalar mu_next = opts.mu0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    detail::BarrierSolver<Scalar> stage{Hz, bz, red, opts, &sol.merit_history, {}, {}};
    stage.opts.mu0 = mu_next;
    stage.opts.max_iter = std::max(1, opts.max_iter - used);
    z = stage.run(z);
    used += stage.steps_used;

    VectorX<Scalar> lambda(static_cast<Index>(full.size()));
    for (std::size_t j = 0; j < red.size(); ++j) {
      const Scalar v = red[j].value(z);
      lambda[static_cast<Index>(j)] = v < 0 ? stage.mu_final / (-v) : 0;
    }
    VectorX<Scalar> z_out = z;
    detail::kkt_polish<Scalar>(Hz, bz, red, z_out, lambda, opts);
    finish(x_p + N * z_out, lambda, stage.converged);
    sol.iterations = used;
    if (sol.status == QcqpStatus::Optimal || !stage.converged || used >= opts.max_iter ||
        stage.mu_final < Scalar(1e-18))
      break;
    mu_next = stage.mu_final * opts.mu_shrink;
  }
  return sol;
}

template <typename Scalar>
QcqpSolution<Scalar> solve(const QcqpProblem<Scalar>& p, Scalar tol, int max_iter) {
  QcqpOptions<Scalar> opts;
  opts.tol = tol;
  opts.feas_tol = tol;
  opts.max_iter = max_iter;
  return solve(p, opts);
}

}  // namespace tfmm
