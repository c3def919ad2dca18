#pragma once

#include <Eigen/Dense>
#include <type_traits>

namespace tfmm {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Read-only vector argument that binds Eigen expressions without forcing the
// caller to materialize them; the type_identity keeps Scalar deduction on the
// primary argument.
template <typename Scalar>
using ConstVecRef = Eigen::Ref<const VectorX<std::type_identity_t<Scalar>>>;

template <typename Scalar>
using ConstMatRef = Eigen::Ref<const MatrixX<std::type_identity_t<Scalar>>>;

template <typename Scalar>
MatrixX<Scalar> symmetrized(const MatrixX<Scalar>& m) {
  return Scalar(0.5) * (m + m.transpose());
}

// Symmetric PSD square root; eigenvalues that are negative from roundoff are clamped.
template <typename Scalar>
MatrixX<Scalar> psd_sqrt(const MatrixX<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m);
  VectorX<Scalar> d = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

template <typename Scalar>
Scalar min_eigenvalue(const MatrixX<Scalar>& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>>(m).eigenvalues().minCoeff();
}

template <typename Scalar>
Scalar spectral_radius(const MatrixX<Scalar>& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>>(m).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace tfmm
