#pragma once

// Independent oracles used by the test suites. Everything here is written
// against the math directly (plain loops, textbook formulas) and must stay
// decoupled from the library implementation paths it checks.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature.
// ---------------------------------------------------------------------------

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int depth = 40) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, simpson(f, a, b, fa, fm, fb), tol, depth);
}

// ---------------------------------------------------------------------------
// Central finite differences.
// ---------------------------------------------------------------------------

inline VectorXd finite_difference_gradient(const std::function<double(const VectorXd&)>& f,
                                           const VectorXd& x, double h = 1e-5) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Conjugate gradient for SPD systems.
// ---------------------------------------------------------------------------

inline VectorXd conjugate_gradient(const MatrixXd& a, const VectorXd& b, double tol = 1e-14,
                                   int max_iter = 10000) {
  VectorXd x = VectorXd::Zero(b.size());
  VectorXd r = b;
  VectorXd p = r;
  double rs = r.squaredNorm();
  for (int it = 0; it < max_iter && std::sqrt(rs) > tol * (1.0 + b.norm()); ++it) {
    const VectorXd ap = a * p;
    const double alpha = rs / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Joseph-form covariance update.
// ---------------------------------------------------------------------------

inline MatrixXd joseph_update(const MatrixXd& p, const MatrixXd& c, const VectorXd& r_diag) {
  const MatrixXd s = c * p * c.transpose() + MatrixXd(r_diag.asDiagonal());
  const MatrixXd k = p * c.transpose() * s.inverse();
  const MatrixXd ikc = MatrixXd::Identity(p.rows(), p.cols()) - k * c;
  const MatrixXd out =
      ikc * p * ikc.transpose() + k * MatrixXd(r_diag.asDiagonal()) * k.transpose();
  return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// Projected-gradient oracle for convex QCQPs.
//
// Quadratic objective 0.5 x'Hx + b'x, constraints x'M_j x + q_j'x + r_j <= 0
// with M_j PSD. The projection onto a single sublevel set is computed by
// bisection on the KKT multiplier; feasibility for the intersection uses
// cyclic alternating projections.
// ---------------------------------------------------------------------------

struct QuadConstraintOracle {
  MatrixXd m;
  VectorXd q;
  double r = 0;

  // Eigendecomposition cached so repeated projections stay cheap.
  MatrixXd vecs;
  VectorXd lam;

  QuadConstraintOracle(MatrixXd m_in, VectorXd q_in, double r_in)
      : m(std::move(m_in)), q(std::move(q_in)), r(r_in) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    vecs = es.eigenvectors();
    lam = es.eigenvalues();
  }

  double value(const VectorXd& x) const { return x.dot(m * x) + q.dot(x) + r; }
};

inline VectorXd project_single(const QuadConstraintOracle& c, const VectorXd& x0) {
  if (c.value(x0) <= 0) return x0;
  if (c.m.cwiseAbs().maxCoeff() == 0.0) {
    return x0 - (c.q.dot(x0) + c.r) / c.q.squaredNorm() * c.q;
  }
  const VectorXd z0 = c.vecs.transpose() * x0;
  const VectorXd qt = c.vecs.transpose() * c.q;
  auto phi = [&](double mu) {
    double v = c.r;
    for (Eigen::Index i = 0; i < c.lam.size(); ++i) {
      const double zi = (z0[i] - mu * qt[i]) / (1.0 + 2.0 * mu * c.lam[i]);
      v += c.lam[i] * zi * zi + qt[i] * zi;
    }
    return v;
  };
  double lo = 0.0, hi = 1.0;
  while (phi(hi) > 0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 0 ? lo : hi) = mid;
  }
  const double mu = hi;
  VectorXd z(c.lam.size());
  for (Eigen::Index i = 0; i < c.lam.size(); ++i)
    z[i] = (z0[i] - mu * qt[i]) / (1.0 + 2.0 * mu * c.lam[i]);
  return c.vecs * z;
}

// Dykstra's alternating projections: converges to the nearest point of the
// intersection (plain cyclic projection only reaches some feasible point).
inline VectorXd project_intersection(const std::vector<QuadConstraintOracle>& cs, VectorXd x,
                                     int cycles = 200) {
  std::vector<VectorXd> corr(cs.size(), VectorXd::Zero(x.size()));
  for (int p = 0; p < cycles; ++p) {
    double moved = 0.0;
    for (std::size_t j = 0; j < cs.size(); ++j) {
      const VectorXd y = x + corr[j];
      const VectorXd px = project_single(cs[j], y);
      corr[j] = y - px;
      moved = std::max(moved, (px - x).cwiseAbs().maxCoeff());
      x = px;
    }
    if (moved < 1e-14 * (1.0 + x.cwiseAbs().maxCoeff())) break;
  }
  return x;
}

inline VectorXd projected_gradient_qcqp(const MatrixXd& h, const VectorXd& b,
                                        const std::vector<QuadConstraintOracle>& cs,
                                        VectorXd x, int iters = 800) {
  const double step = 1.0 / Eigen::SelfAdjointEigenSolver<MatrixXd>(h).eigenvalues().maxCoeff();
  x = project_intersection(cs, x);
  for (int it = 0; it < iters; ++it) {
    x = project_intersection(cs, x - step * (h * x + b));
  }
  return x;
}

// ---------------------------------------------------------------------------
// Scalar Riccati fixed point for a stationary scalar model.
// ---------------------------------------------------------------------------

inline double scalar_riccati_fixed_point(double a, double c, double q, double r,
                                         int iters = 100000) {
  double p = 1.0;
  for (int i = 0; i < iters; ++i) {
    const double pred = a * p * a + q;
    p = pred - pred * c * c * pred / (c * pred * c + r);
  }
  return p;
}

}  // namespace oracles
