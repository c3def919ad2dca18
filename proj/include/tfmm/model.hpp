#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tfmm/rng.hpp"
#include "tfmm/types.hpp"

namespace tfmm {

// Linear state-space model with Gaussian process noise and independent
// univariate Student-t measurement noise:
//   x_{k+1} = A x_k + w_k,  w_k ~ N(0, Q)
//   y_k     = C x_k + v_k,  v_{k,i} ~ T(0, sigma_i, nu_i)
//   x_1     ~ N(x0_mean, P0)
template <typename Scalar = double>
struct StateSpaceModel {
  MatrixX<Scalar> A;
  MatrixX<Scalar> C;
  MatrixX<Scalar> Q;
  VectorX<Scalar> sigma;
  VectorX<Scalar> nu;
  VectorX<Scalar> x0_mean;
  MatrixX<Scalar> P0;

  Index state_dim() const { return A.rows(); }
  Index measurement_dim() const { return C.rows(); }

  void validate() const {
    const Index nx = state_dim();
    const Index ny = measurement_dim();
    if (A.rows() != A.cols()) throw std::invalid_argument("model: A must be square");
    if (C.cols() != nx) throw std::invalid_argument("model: cols(C) must equal state dim");
    if (Q.rows() != nx || Q.cols() != nx) throw std::invalid_argument("model: Q must be n_x x n_x");
    if (P0.rows() != nx || P0.cols() != nx) throw std::invalid_argument("model: P0 must be n_x x n_x");
    if (x0_mean.size() != nx) throw std::invalid_argument("model: x0_mean must have state dim");
    if (sigma.size() != ny || nu.size() != ny)
      throw std::invalid_argument("model: sigma and nu must have one entry per channel");
    if ((sigma.array() <= 0).any()) throw std::invalid_argument("model: all sigma must be > 0");
    if ((nu.array() <= 0).any()) throw std::invalid_argument("model: all nu must be > 0");

    const Scalar qs = Scalar(1) + Q.cwiseAbs().maxCoeff();
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * qs)
      throw std::invalid_argument("model: Q must be symmetric");
    const Scalar ps = Scalar(1) + P0.cwiseAbs().maxCoeff();
    if ((P0 - P0.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * ps)
      throw std::invalid_argument("model: P0 must be symmetric");
    if (min_eigenvalue<Scalar>(Q) < Scalar(-1e-10) * qs)
      throw std::invalid_argument("model: Q must be positive semidefinite");
    if (min_eigenvalue<Scalar>(P0) < Scalar(-1e-10) * ps)
      throw std::invalid_argument("model: P0 must be positive semidefinite");
  }
};

enum class NoiseKind { StudentT, ContaminatedGaussian };

// Law used to *generate* measurement noise. Kept separate from the model's
// (sigma, nu) so data can be drawn from one law while the filter assumes
// another (contaminated-Gaussian data vs. Student-t filter).
template <typename Scalar = double>
struct MeasurementNoiseSpec {
  NoiseKind kind = NoiseKind::StudentT;
  VectorX<Scalar> sigma, nu;                            // StudentT
  VectorX<Scalar> p_outlier, var_nominal, var_outlier;  // ContaminatedGaussian

  static MeasurementNoiseSpec student_t(VectorX<Scalar> sigma, VectorX<Scalar> nu) {
    MeasurementNoiseSpec s;
    s.kind = NoiseKind::StudentT;
    s.sigma = std::move(sigma);
    s.nu = std::move(nu);
    return s;
  }

  static MeasurementNoiseSpec contaminated_gaussian(VectorX<Scalar> p_outlier,
                                                    VectorX<Scalar> var_nominal,
                                                    VectorX<Scalar> var_outlier) {
    MeasurementNoiseSpec s;
    s.kind = NoiseKind::ContaminatedGaussian;
    s.p_outlier = std::move(p_outlier);
    s.var_nominal = std::move(var_nominal);
    s.var_outlier = std::move(var_outlier);
    return s;
  }

  Index channels() const {
    return kind == NoiseKind::StudentT ? sigma.size() : p_outlier.size();
  }

  // Zero scales/variances are allowed here (noiseless generation); the filter
  // model keeps strict positivity.
  void validate() const {
    if (kind == NoiseKind::StudentT) {
      if (sigma.size() != nu.size() || sigma.size() == 0)
        throw std::invalid_argument("noise: sigma and nu must be non-empty and equal length");
      if ((sigma.array() < 0).any()) throw std::invalid_argument("noise: sigma must be >= 0");
      if ((nu.array() <= 0).any()) throw std::invalid_argument("noise: nu must be > 0");
    } else {
      const Index n = p_outlier.size();
      if (n == 0 || var_nominal.size() != n || var_outlier.size() != n)
        throw std::invalid_argument("noise: contaminated params must be non-empty and equal length");
      if ((p_outlier.array() < 0).any() || (p_outlier.array() > 1).any())
        throw std::invalid_argument("noise: p_outlier must be in [0, 1]");
      if ((var_nominal.array() < 0).any() || (var_outlier.array() < 0).any())
        throw std::invalid_argument("noise: variances must be >= 0");
    }
  }

  // Stationary per-channel variance of one draw.
  VectorX<Scalar> variance() const {
    if (kind == NoiseKind::StudentT) {
      VectorX<Scalar> v(sigma.size());
      for (Index i = 0; i < sigma.size(); ++i) {
        if (nu[i] <= 2)
          throw std::domain_error("noise: Student-t variance requires nu > 2");
        v[i] = sigma[i] * sigma[i] * nu[i] / (nu[i] - 2);
      }
      return v;
    }
    return (VectorX<Scalar>::Ones(p_outlier.size()) - p_outlier).cwiseProduct(var_nominal) +
           p_outlier.cwiseProduct(var_outlier);
  }

  Scalar draw(Index channel, Rng<Scalar>& rng) const {
    if (kind == NoiseKind::StudentT) return rng.student_t(sigma[channel], nu[channel]);
    // Outlier indicator drawn independently per channel per step.
    const bool outlier = rng.uniform() < p_outlier[channel];
    const Scalar var = outlier ? var_outlier[channel] : var_nominal[channel];
    return std::sqrt(var) * rng.gaussian();
  }
};

template <typename Scalar = double>
struct Trajectory {
  std::vector<VectorX<Scalar>> states;        // x_1 .. x_T
  std::vector<VectorX<Scalar>> measurements;  // y_1 .. y_T

  Index size() const { return static_cast<Index>(states.size()); }
};

// Log-density of the univariate Student-t with scale sigma and dof nu.
template <typename Scalar>
Scalar student_t_logpdf(Scalar v, Scalar sigma, Scalar nu) {
  if (!(sigma > 0) || !(nu > 0))
    throw std::domain_error("student_t_logpdf: sigma and nu must be positive");
  const Scalar z = v / sigma;
  return std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) -
         Scalar(0.5) * std::log(std::numbers::pi_v<Scalar> * nu) - std::log(sigma) -
         (nu + 1) / 2 * std::log1p(z * z / nu);
}

template <typename Scalar>
Trajectory<Scalar> simulate(const StateSpaceModel<Scalar>& model,
                            const MeasurementNoiseSpec<Scalar>& noise, int steps,
                            std::uint64_t seed) {
  model.validate();
  noise.validate();
  if (steps < 1) throw std::invalid_argument("simulate: steps must be >= 1");
  if (noise.channels() != model.measurement_dim())
    throw std::invalid_argument("simulate: noise channel count must match measurement dim");

  const Index nx = model.state_dim();
  const Index ny = model.measurement_dim();
  const MatrixX<Scalar> sqrt_p0 = psd_sqrt<Scalar>(model.P0);
  const MatrixX<Scalar> sqrt_q = psd_sqrt<Scalar>(model.Q);

  Rng<Scalar> state_rng(seed, 0);
  Rng<Scalar> meas_rng(seed, 1);

  Trajectory<Scalar> traj;
  traj.states.reserve(steps);
  traj.measurements.reserve(steps);

  VectorX<Scalar> x = model.x0_mean + sqrt_p0 * state_rng.gaussian_vector(nx);
  for (int k = 0; k < steps; ++k) {
    VectorX<Scalar> y = model.C * x;
    for (Index i = 0; i < ny; ++i) y[i] += noise.draw(i, meas_rng);
    traj.states.push_back(x);
    traj.measurements.push_back(std::move(y));
    if (k + 1 < steps) x = model.A * x + sqrt_q * state_rng.gaussian_vector(nx);
  }
  return traj;
}

}  // namespace tfmm
