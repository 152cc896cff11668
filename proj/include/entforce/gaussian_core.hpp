#pragma once

// Covariance-matrix algebra for Gaussian states of n modes.
//
// Quadratures are ordered mode by mode: (q1, p1, q2, p2, ...). For the
// measurement stage the meters follow the probes: (q1, p1, q2, p2, X1, Y1,
// X2, Y2). Each conjugate pair satisfies [q, p] = i, so the vacuum has
// variance 1/2 per quadrature and Heisenberg requires Var(q)Var(p) >= 1/4.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entforce/errors.hpp"

namespace entforce {

inline constexpr double kVacuumVariance = 0.5;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kUncertaintyTolerance = 1e-10;

namespace detail {

inline void require_even_square(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(who) + ": matrix is not square (" + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + ")");
  }
  if (m.rows() == 0 || m.rows() % 2 != 0) {
    throw DimensionError(std::string(who) + ": quadrature count must be a positive even number, got " +
                         std::to_string(m.rows()));
  }
}

}  // namespace detail

/// Symmetrized second moments C_ij = <{v_i, v_j}>/2 - <v_i><v_j>.
///
/// Stored symmetric: the constructor averages the input with its transpose,
/// so C(i, j) == C(j, i) holds bitwise. Immutable after construction.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(const Eigen::MatrixXd& entries) {
    detail::require_even_square(entries, "CovarianceMatrix");
    m_ = 0.5 * (entries + entries.transpose());
  }

  /// (1/2) I for the given number of modes.
  static CovarianceMatrix vacuum(int modes) {
    return CovarianceMatrix(kVacuumVariance * Eigen::MatrixXd::Identity(2 * modes, 2 * modes));
  }

  static CovarianceMatrix diagonal(const std::vector<double>& variances) {
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(variances.data(),
                                                          static_cast<Eigen::Index>(variances.size()));
    return CovarianceMatrix(d.asDiagonal().toDenseMatrix());
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  int modes() const { return dim() / 2; }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }

  /// Variance of the linear combination w . v.
  double variance_of(const Eigen::VectorXd& w) const {
    if (w.size() != m_.rows()) throw DimensionError("variance_of: weight vector size mismatch");
    return w.dot(m_ * w);
  }

 private:
  Eigen::MatrixXd m_;
};

/// First moments <v>, same ordering as the covariance they accompany.
class QuadratureVector {
 public:
  explicit QuadratureVector(Eigen::VectorXd entries) : v_(std::move(entries)) {
    if (v_.size() == 0 || v_.size() % 2 != 0) {
      throw DimensionError("QuadratureVector: quadrature count must be a positive even number, got " +
                           std::to_string(v_.size()));
    }
  }

  static QuadratureVector zero(int dim) { return QuadratureVector(Eigen::VectorXd::Zero(dim)); }

  int dim() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_(i); }
  const Eigen::VectorXd& vector() const { return v_; }

 private:
  Eigen::VectorXd v_;
};

struct ValidationReport {
  double symmetry_defect = 0.0;
  double min_eigenvalue = 0.0;
  /// Var(q_k) * Var(p_k) for each mode k.
  std::vector<double> uncertainty_products;
  double min_uncertainty_product = 0.0;
  bool symmetric = false;
  bool positive_semidefinite = false;
  bool satisfies_uncertainty = false;

  bool passed() const { return symmetric && positive_semidefinite && satisfies_uncertainty; }
};

/// Checks symmetry, PSD (eigenvalues >= -1e-10) and per-mode Heisenberg
/// products (>= 1/4 - 1e-10). Accepts a raw matrix so that asymmetric input
/// can be reported rather than silently symmetrized.
inline ValidationReport validate(const Eigen::MatrixXd& c) {
  detail::require_even_square(c, "validate");
  ValidationReport report;
  report.symmetry_defect = (c - c.transpose()).cwiseAbs().maxCoeff();
  report.symmetric = report.symmetry_defect == 0.0;

  const Eigen::MatrixXd sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  report.min_eigenvalue = eig.eigenvalues().minCoeff();
  report.positive_semidefinite = report.min_eigenvalue >= -kPsdTolerance;

  const auto n = c.rows() / 2;
  report.uncertainty_products.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    report.uncertainty_products.push_back(c(2 * k, 2 * k) * c(2 * k + 1, 2 * k + 1));
  }
  report.min_uncertainty_product =
      *std::min_element(report.uncertainty_products.begin(), report.uncertainty_products.end());
  report.satisfies_uncertainty = report.min_uncertainty_product >= 0.25 - kUncertaintyTolerance;
  return report;
}

inline ValidationReport validate(const CovarianceMatrix& c) { return validate(c.matrix()); }

/// M C M^T, symmetrized.
inline CovarianceMatrix congruence(const CovarianceMatrix& c, const Eigen::MatrixXd& m) {
  if (m.rows() != c.dim() || m.cols() != c.dim()) {
    throw DimensionError("congruence: transform is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", covariance has dim " + std::to_string(c.dim()));
  }
  return CovarianceMatrix(m * c.matrix() * m.transpose());
}

/// Block-diagonal embedding A (+) B of independent subsystems.
inline CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.dim() + b.dim(), a.dim() + b.dim());
  out.topLeftCorner(a.dim(), a.dim()) = a.matrix();
  out.bottomRightCorner(b.dim(), b.dim()) = b.matrix();
  return CovarianceMatrix(out);
}

inline QuadratureVector direct_sum(const QuadratureVector& a, const QuadratureVector& b) {
  Eigen::VectorXd out(a.dim() + b.dim());
  out << a.vector(), b.vector();
  return QuadratureVector(out);
}

/// J = diag(j2, j2, ...) with j2 = [[0, 1], [-1, 0]].
inline Eigen::MatrixXd symplectic_form(int dim) {
  if (dim <= 0 || dim % 2 != 0) throw DimensionError("symplectic_form: dim must be positive and even");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < dim; k += 2) {
    j(k, k + 1) = 1.0;
    j(k + 1, k) = -1.0;
  }
  return j;
}

/// max |M J M^T - J|.
inline double symplectic_defect(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd j = symplectic_form(static_cast<int>(m.rows()));
  return (m * j * m.transpose() - j).cwiseAbs().maxCoeff();
}

/// Smallest symplectic eigenvalue of the partially transposed two-mode
/// covariance (p2 -> -p2). Below the vacuum variance the state is entangled.
inline double min_partial_transpose_eigenvalue(const CovarianceMatrix& c) {
  if (c.dim() != 4) throw DimensionError("min_partial_transpose_eigenvalue: expects a two-mode covariance");
  Eigen::Vector4d flip(1.0, 1.0, 1.0, -1.0);
  const Eigen::MatrixXd pt = flip.asDiagonal() * c.matrix() * flip.asDiagonal();
  // symplectic eigenvalues are the moduli of the eigenvalues of i J C
  const Eigen::MatrixXd jc = symplectic_form(4) * pt;
  Eigen::EigenSolver<Eigen::MatrixXd> es(jc, false);
  double nu = std::abs(es.eigenvalues()(0));
  for (int i = 1; i < 4; ++i) nu = std::min(nu, std::abs(es.eigenvalues()(i)));
  return nu;
}

}  // namespace entforce
