#pragma once

#include <cmath>
#include <stdexcept>

#include "tfmm/types.hpp"

namespace tfmm {

// Student-t MAP objective for one measurement update:
//
//   F(x) = (x - m)' P^{-1} (x - m)
//        + sum_i (1 + nu_i) log(1 + (C_i x - y_i)^2 / (sigma_i^2 nu_i))
//
// with m, P^{-1} the predicted mean and precision. The prior term is the
// squared Mahalanobis form; only that reading makes the Gaussian limit the
// usual Kalman least-squares problem.
template <typename Scalar = double>
struct MapObjective {
  VectorX<Scalar> prior_mean;
  MatrixX<Scalar> prior_precision;  // symmetric PD
  MatrixX<Scalar> C;
  VectorX<Scalar> y;
  VectorX<Scalar> sigma, nu;

  Index dim() const { return prior_mean.size(); }
  Index channels() const { return C.rows(); }

  void validate() const {
    const Index n = dim();
    const Index m = channels();
    if (prior_precision.rows() != n || prior_precision.cols() != n)
      throw std::invalid_argument("objective: precision must be n x n");
    if (C.cols() != n && m > 0) throw std::invalid_argument("objective: cols(C) mismatch");
    if (y.size() != m || sigma.size() != m || nu.size() != m)
      throw std::invalid_argument("objective: y/sigma/nu must have one entry per channel");
    if ((sigma.array() <= 0).any() || (nu.array() <= 0).any())
      throw std::invalid_argument("objective: sigma and nu must be > 0");
  }
};

// Quadratic q(x) = 0.5 x'Hx + b'x + c with H symmetric PD. The constant is
// carried so surrogate values are directly comparable to F values in descent
// and majorization tests. `anchor` is the expansion point.
template <typename Scalar = double>
struct QuadraticSurrogate {
  MatrixX<Scalar> H;
  VectorX<Scalar> b;
  Scalar c = 0;
  VectorX<Scalar> anchor;

  Scalar value(const ConstVecRef<Scalar>& x) const {
    return Scalar(0.5) * x.dot(H * x) + b.dot(x) + c;
  }
  VectorX<Scalar> gradient(const ConstVecRef<Scalar>& x) const { return H * x + b; }
};

namespace detail {

// Weight (1 + nu) / (nu sigma^2 + w^2); the residual square is accumulated in
// extended precision before the division. Denominator >= nu sigma^2 > 0.
template <typename Scalar>
Scalar t_weight(Scalar residual, Scalar sigma, Scalar nu) {
  const long double w2 = static_cast<long double>(residual) * static_cast<long double>(residual);
  const long double den =
      static_cast<long double>(nu) * static_cast<long double>(sigma) * sigma + w2;
  return static_cast<Scalar>((1.0L + static_cast<long double>(nu)) / den);
}

}  // namespace detail

template <typename Scalar>
Scalar eval_F_ncvx(const MapObjective<Scalar>& obj, const ConstVecRef<Scalar>& x) {
  Scalar f = 0;
  for (Index i = 0; i < obj.channels(); ++i) {
    const Scalar w = obj.C.row(i).dot(x) - obj.y[i];
    f += (1 + obj.nu[i]) * std::log1p(w * w / (obj.sigma[i] * obj.sigma[i] * obj.nu[i]));
  }
  return f;
}

template <typename Scalar>
VectorX<Scalar> grad_F_ncvx(const MapObjective<Scalar>& obj, const ConstVecRef<Scalar>& x) {
  VectorX<Scalar> g = VectorX<Scalar>::Zero(x.size());
  for (Index i = 0; i < obj.channels(); ++i) {
    const Scalar w = obj.C.row(i).dot(x) - obj.y[i];
    g += 2 * detail::t_weight(w, obj.sigma[i], obj.nu[i]) * w * obj.C.row(i).transpose();
  }
  return g;
}

template <typename Scalar>
Scalar eval_F(const MapObjective<Scalar>& obj, const ConstVecRef<Scalar>& x) {
  if (x.size() != obj.dim()) throw std::invalid_argument("eval_F: dimension mismatch");
  const VectorX<Scalar> d = x - obj.prior_mean;
  return d.dot(obj.prior_precision * d) + eval_F_ncvx(obj, x);
}

template <typename Scalar>
VectorX<Scalar> grad_F(const MapObjective<Scalar>& obj, const ConstVecRef<Scalar>& x) {
  if (x.size() != obj.dim()) throw std::invalid_argument("grad_F: dimension mismatch");
  return 2 * (obj.prior_precision * (x - obj.prior_mean)) + grad_F_ncvx(obj, x);
}

// Lipschitz constant of grad F_ncvx: L = 2 sum_i (nu_i + 1) / (nu_i sigma_i^2) ||C_i||^2.
// Depends only on C, sigma, nu.
template <typename Scalar>
Scalar lipschitz_L(const MapObjective<Scalar>& obj) {
  Scalar l = 0;
  for (Index i = 0; i < obj.channels(); ++i) {
    l += 2 * (obj.nu[i] + 1) / (obj.nu[i] * obj.sigma[i] * obj.sigma[i]) *
         obj.C.row(i).squaredNorm();
  }
  return l;
}

// Surrogate from the tangent bound on the concave logarithm: each log term is
// replaced by w_i^t-weighted squared residuals, giving
//   F_log(x) = (x - m)'P^{-1}(x - m) + sum_i w_i (C_i x - y_i)^2 + const,
// a global upper bound on F that is tight (value and gradient) at `anchor`.
template <typename Scalar>
QuadraticSurrogate<Scalar> build_surrogate_log(const MapObjective<Scalar>& obj,
                                               const ConstVecRef<Scalar>& anchor) {
  if (anchor.size() != obj.dim()) throw std::invalid_argument("surrogate: dimension mismatch");
  QuadraticSurrogate<Scalar> s;
  s.H = 2 * obj.prior_precision;
  s.b = -2 * (obj.prior_precision * obj.prior_mean);
  for (Index i = 0; i < obj.channels(); ++i) {
    const Scalar w = obj.C.row(i).dot(anchor) - obj.y[i];
    const Scalar m = detail::t_weight(w, obj.sigma[i], obj.nu[i]);
    s.H += 2 * m * (obj.C.row(i).transpose() * obj.C.row(i));
    s.b -= 2 * m * obj.y[i] * obj.C.row(i).transpose();
  }
  s.H = symmetrized<Scalar>(s.H);
  s.anchor = anchor;
  s.c = eval_F(obj, anchor) - (Scalar(0.5) * anchor.dot(s.H * anchor) + s.b.dot(anchor));
  return s;
}

// Surrogate from the descent lemma: the nonconvex part is bounded by its
// tangent plane at `anchor` plus (L/2)||x - anchor||^2.
template <typename Scalar>
QuadraticSurrogate<Scalar> build_surrogate_smooth(const MapObjective<Scalar>& obj,
                                                  const ConstVecRef<Scalar>& anchor) {
  if (anchor.size() != obj.dim()) throw std::invalid_argument("surrogate: dimension mismatch");
  const Scalar l = lipschitz_L(obj);
  QuadraticSurrogate<Scalar> s;
  s.H = symmetrized<Scalar>(2 * obj.prior_precision) +
        l * MatrixX<Scalar>::Identity(obj.dim(), obj.dim());
  s.b = -2 * (obj.prior_precision * obj.prior_mean) + grad_F_ncvx(obj, anchor) - l * anchor;
  s.anchor = anchor;
  s.c = eval_F(obj, anchor) - (Scalar(0.5) * anchor.dot(s.H * anchor) + s.b.dot(anchor));
  return s;
}

}  // namespace tfmm
