#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tfmm/types.hpp"

namespace tfmm {

enum class ConstraintKind { LinearEq, LinearIneq, ConvexQuad, AnnulusOuter, AnnulusInner, IndefQuad };

// Convex quadratic inequality x'Mx + q'x + r <= 0 with M symmetric PSD.
template <typename Scalar = double>
struct ConvexQuadConstraint {
  MatrixX<Scalar> M;
  VectorX<Scalar> q;
  Scalar r = 0;

  Scalar value(const ConstVecRef<Scalar>& x) const {
    return x.dot(M * x) + q.dot(x) + r;
  }
  VectorX<Scalar> gradient(const ConstVecRef<Scalar>& x) const {
    return 2 * (M * x) + q;
  }
};

// One scalar constraint g(x) <= 0 held in canonical quadratic form
// g(x) = x'Mx + q'x + r. A LinearEq stores the signed residual a'x - b in
// (q, r); eval_g reports its absolute value and as_inequality_pair() yields
// the usual two-inequality encoding.
template <typename Scalar = double>
struct Constraint {
  ConstraintKind kind = ConstraintKind::LinearIneq;
  MatrixX<Scalar> M;
  VectorX<Scalar> q;
  Scalar r = 0;
  Scalar curvature_bound = 0;  // Lipschitz constant of grad g: 2 * spectral radius of M

  // Construction parameters retained for serialization and reporting.
  Scalar radius = 0, epsilon = 0;
  std::vector<Index> indices;

  Index dim() const { return q.size(); }

  bool is_convex() const {
    return kind != ConstraintKind::AnnulusInner && kind != ConstraintKind::IndefQuad;
  }

  static Constraint linear_eq(VectorX<Scalar> a, Scalar b) {
    if (a.size() == 0 || a.norm() == 0)
      throw std::invalid_argument("constraint: equality normal must be nonzero");
    Constraint c;
    c.kind = ConstraintKind::LinearEq;
    c.M = MatrixX<Scalar>::Zero(a.size(), a.size());
    c.q = std::move(a);
    c.r = -b;
    return c;
  }

  static Constraint linear_ineq(VectorX<Scalar> a, Scalar b) {
    Constraint c;
    c.kind = ConstraintKind::LinearIneq;
    c.M = MatrixX<Scalar>::Zero(a.size(), a.size());
    c.q = std::move(a);
    c.r = -b;
    return c;
  }

  static Constraint convex_quad(MatrixX<Scalar> m, VectorX<Scalar> q, Scalar r) {
    Constraint c;
    c.kind = ConstraintKind::ConvexQuad;
    c.M = symmetrized<Scalar>(m);
    if (min_eigenvalue<Scalar>(c.M) < Scalar(-1e-10) * (1 + c.M.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("constraint: convex_quad matrix must be PSD");
    c.q = std::move(q);
    c.r = r;
    c.curvature_bound = 2 * spectral_radius<Scalar>(c.M);
    return c;
  }

  static Constraint annulus_outer(Scalar radius, Scalar epsilon, std::vector<Index> idx,
                                  Index dim) {
    Constraint c = annulus_base(radius, epsilon, idx, dim);
    c.kind = ConstraintKind::AnnulusOuter;
    c.r = -(radius + epsilon) * (radius + epsilon);
    c.curvature_bound = 2;
    return c;
  }

  static Constraint annulus_inner(Scalar radius, Scalar epsilon, std::vector<Index> idx,
                                  Index dim) {
    Constraint c = annulus_base(radius, epsilon, idx, dim);
    c.kind = ConstraintKind::AnnulusInner;
    c.M = -c.M;
    c.r = (radius - epsilon) * (radius - epsilon);
    c.curvature_bound = 2;
    return c;
  }

  static Constraint indef_quad(MatrixX<Scalar> d) {
    Constraint c;
    c.kind = ConstraintKind::IndefQuad;
    c.M = symmetrized<Scalar>(d);
    c.q = VectorX<Scalar>::Zero(d.rows());
    c.r = 0;
    c.curvature_bound = 2 * spectral_radius<Scalar>(c.M);
    return c;
  }

 private:
  static Constraint annulus_base(Scalar radius, Scalar epsilon, std::vector<Index>& idx,
                                 Index dim) {
    if (!(radius > epsilon && epsilon > 0))
      throw std::invalid_argument("constraint: annulus requires radius > epsilon > 0");
    Constraint c;
    c.M = MatrixX<Scalar>::Zero(dim, dim);
    for (Index i : idx) {
      if (i < 0 || i >= dim) throw std::invalid_argument("constraint: annulus index out of range");
      if (c.M(i, i) != 0) throw std::invalid_argument("constraint: annulus index repeated");
      c.M(i, i) = 1;
    }
    c.q = VectorX<Scalar>::Zero(dim);
    c.radius = radius;
    c.epsilon = epsilon;
    c.indices = std::move(idx);
    return c;
  }
};

template <typename Scalar>
Scalar eval_g(const Constraint<Scalar>& c, const ConstVecRef<Scalar>& x) {
  if (x.size() != c.dim()) throw std::invalid_argument("eval_g: dimension mismatch");
  if (c.kind == ConstraintKind::LinearEq) return std::abs(c.q.dot(x) + c.r);
  return x.dot(c.M * x) + c.q.dot(x) + c.r;
}

template <typename Scalar>
VectorX<Scalar> grad_g(const Constraint<Scalar>& c, const ConstVecRef<Scalar>& x) {
  if (x.size() != c.dim()) throw std::invalid_argument("grad_g: dimension mismatch");
  if (c.kind == ConstraintKind::LinearEq) {
    const Scalar res = c.q.dot(x) + c.r;
    const Scalar s = res > 0 ? Scalar(1) : (res < 0 ? Scalar(-1) : Scalar(0));
    return s * c.q;
  }
  return 2 * (c.M * x) + c.q;
}

// LinearEq as the pair a'x <= b, -a'x <= -b; every other kind passes through.
template <typename Scalar>
std::vector<Constraint<Scalar>> as_inequality_pair(const Constraint<Scalar>& c) {
  if (c.kind != ConstraintKind::LinearEq) return {c};
  return {Constraint<Scalar>::linear_ineq(c.q, -c.r),
          Constraint<Scalar>::linear_ineq(VectorX<Scalar>(-c.q), c.r)};
}

// Quadratic majorizer of g at `anchor`:
//   g~(x) = g(anchor) + grad g(anchor)'(x - anchor) + (G/2)||x - anchor||^2
// with G the Lipschitz constant of grad g (exact for quadratics). Kinds that
// are already convex quadratic pass through unchanged.
template <typename Scalar>
ConvexQuadConstraint<Scalar> majorize_g(const Constraint<Scalar>& c,
                                        const ConstVecRef<Scalar>& anchor) {
  if (anchor.size() != c.dim()) throw std::invalid_argument("majorize_g: dimension mismatch");
  if (c.kind == ConstraintKind::LinearEq)
    throw std::invalid_argument("majorize_g: expand equality constraints first");
  if (c.is_convex()) return {c.M, c.q, c.r};

  const Scalar g0 = eval_g(c, anchor);
  const VectorX<Scalar> grad0 = grad_g(c, anchor);
  const Scalar half_g = c.curvature_bound / 2;
  ConvexQuadConstraint<Scalar> out;
  out.M = half_g * MatrixX<Scalar>::Identity(c.dim(), c.dim());
  out.q = grad0 - c.curvature_bound * anchor;
  out.r = g0 - grad0.dot(anchor) + half_g * anchor.squaredNorm();
  return out;
}

namespace detail {

// Root of g(x(mu)) = 0 along the KKT path x(mu) = (I + 2 mu M)^{-1} (x0 - mu q),
// expressed in the eigenbasis of M. Returns the feasible-side iterate.
//
// When M has a negative eigenvalue the valid interval is mu in [0, mu_max)
// with a pole at mu_max = 1/(2|lam_min|); bisecting mu directly cannot resolve
// roots close to the pole, so that branch is reparameterized as
// mu(u) = (1 - e^-u) * mu_max with denominators in the cancellation-stable
// form (1 - rho) + rho e^-u, rho = lam_i / lam_min.
template <typename Scalar>
bool secular_projection(const MatrixX<Scalar>& m, const VectorX<Scalar>& q, Scalar r,
                        const VectorX<Scalar>& x0, VectorX<Scalar>& out) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m);
  const VectorX<Scalar> lam = es.eigenvalues();
  const VectorX<Scalar> z0 = es.eigenvectors().transpose() * x0;
  const VectorX<Scalar> qt = es.eigenvectors().transpose() * q;
  const Scalar lam_min = lam.minCoeff();
  VectorX<Scalar> z(lam.size());

  auto bisect = [](auto&& phi, Scalar lo, Scalar hi) {
    for (int it = 0; it < 200; ++it) {
      const Scalar mid = lo + (hi - lo) / 2;
      (phi(mid) > 0 ? lo : hi) = mid;
    }
    return hi;  // feasible side
  };

  if (lam_min < 0) {
    const Scalar alpha = 2 * std::abs(lam_min);
    auto z_at = [&](Scalar u) {
      const Scalar emu = std::exp(-u);
      const Scalar mu = (1 - emu) / alpha;
      for (Index i = 0; i < lam.size(); ++i) {
        const Scalar rho = lam[i] / lam_min;
        const Scalar den = lam[i] < 0 ? (1 - rho) + rho * emu : 1 + 2 * mu * lam[i];
        z[i] = (z0[i] - mu * qt[i]) / den;
      }
    };
    auto phi = [&](Scalar u) {
      z_at(u);
      return Scalar(z.dot(lam.asDiagonal() * z) + qt.dot(z) + r);
    };
    Scalar hi = 1;
    bool found = false;
    for (; hi < Scalar(700); hi *= 2) {
      if (phi(hi) < 0) {
        found = true;
        break;
      }
    }
    if (!found) return false;  // no pull onto the blow-up eigenspace (tie case)
    z_at(bisect(phi, hi / 2 > 1 ? hi / 2 : Scalar(0), hi));
  } else {
    auto z_at = [&](Scalar mu) {
      for (Index i = 0; i < lam.size(); ++i) z[i] = (z0[i] - mu * qt[i]) / (1 + 2 * mu * lam[i]);
    };
    auto phi = [&](Scalar mu) {
      z_at(mu);
      return Scalar(z.dot(lam.asDiagonal() * z) + qt.dot(z) + r);
    };
    Scalar hi = 1;
    int grow = 0;
    while (phi(hi) > 0 && grow++ < 200) hi *= 2;
    if (phi(hi) > 0) return false;  // sublevel set empty (infimum of g positive)
    z_at(bisect(phi, Scalar(0), hi));
  }
  out = es.eigenvectors() * z;
  return true;
}

}  // namespace detail

// Euclidean projection of x onto {g <= 0}; for LinearEq, onto the hyperplane.
// Centered starts with no pull toward the sublevel set (the annulus-from-origin
// tie) are broken by a 1e-9 nudge along the first coordinate that enters the
// indefinite part of g.
template <typename Scalar>
VectorX<Scalar> project_feasible(const Constraint<Scalar>& c,
                                 const ConstVecRef<Scalar>& x,
                                 Scalar feas_tol = Scalar(1e-9)) {
  if (x.size() != c.dim()) throw std::invalid_argument("project_feasible: dimension mismatch");
  if (c.kind == ConstraintKind::LinearEq) {
    const Scalar res = c.q.dot(x) + c.r;
    if (std::abs(res) <= feas_tol) return x;
    return x - res / c.q.squaredNorm() * c.q;
  }
  if (eval_g(c, x) <= feas_tol) return x;
  if (c.M.cwiseAbs().maxCoeff() == 0) {
    const Scalar res = c.q.dot(x) + c.r;
    return x - res / c.q.squaredNorm() * c.q;
  }

  VectorX<Scalar> out;
  if (detail::secular_projection<Scalar>(c.M, c.q, c.r, x, out)) return out;

  // Tie case: perturb along the first coordinate present in the quadratic part.
  VectorX<Scalar> nudged = x;
  for (Index j = 0; j < c.dim(); ++j) {
    if (c.M.col(j).cwiseAbs().maxCoeff() > 0) {
      nudged[j] += Scalar(1e-9);
      break;
    }
  }
  if (detail::secular_projection<Scalar>(c.M, c.q, c.r, nudged, out)) return out;
  throw std::runtime_error("project_feasible: sublevel set unreachable");
}

}  // namespace tfmm
