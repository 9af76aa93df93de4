// beamkit/linalg.hpp

// Copyright 2026  The beamkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace beamkit {

// (A + A^H) / 2
inline Eigen::MatrixXcd Hermitize(const Eigen::MatrixXcd &a) {
  return (a + a.adjoint()) * 0.5;
}

// Adds `fraction * trace(A) / M` to the diagonal.
inline void LoadDiagonal(Eigen::MatrixXcd *a, double fraction) {
  const double scale = std::abs(a->trace().real()) / static_cast<double>(a->rows());
  a->diagonal().array() += fraction * scale;
}

// Solves A X = B for Hermitian A. Cholesky first; a rank-revealing
// pseudo-inverse solve when A is not numerically positive definite.
inline Eigen::MatrixXcd SolveHermitian(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXcd x = llt.solve(b);
    if (x.allFinite()) return x;
  }
  return a.completeOrthogonalDecomposition().solve(b);
}

inline double MinEigenvalue(const Eigen::MatrixXcd &a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Hermitize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double HermitianError(const Eigen::MatrixXcd &a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

// Pearson correlation; 0 when either sequence is constant.
inline double Pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n == 0 || b.size() != n) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace beamkit
