#include "msopt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace msopt {

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

SvdResult svd(const Matrix& m) {
  if (!m.allFinite()) {
    throw InvalidArgument("svd: non-finite entries in " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + " matrix");
  }
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success || !solver.singularValues().allFinite()) {
    throw NumericalError("svd: Jacobi iteration did not converge for " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + " matrix");
  }
  // Eigen already returns singular values in decreasing order.
  return SvdResult{solver.matrixU(), solver.singularValues(), solver.matrixV().transpose()};
}

EigResult sym_eig(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidArgument("sym_eig: matrix is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected square");
  }
  if (!m.allFinite()) throw InvalidArgument("sym_eig: non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw InvalidArgument("sym_eig: matrix is not symmetric (max |m - m^T| = " +
                          std::to_string(asym) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sym_eig: iteration did not converge for " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + " matrix");
  }
  return EigResult{solver.eigenvalues(), solver.eigenvectors()};
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("log_sum_exp: empty input");
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

Matrix fd_jacobian(const VectorFunction& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_jacobian: step must be positive");
  Matrix jac;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const Vector fp = f(probe);
    probe(i) = x(i) - h;
    const Vector fm = f(probe);
    probe(i) = x(i);
    if (i == 0) jac.resize(fp.size(), x.size());
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Vector fd_gradient(const ScalarFunction& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_gradient: step must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double fp = f(probe);
    probe(i) = x(i) - h;
    const double fm = f(probe);
    probe(i) = x(i);
    grad(i) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

Vector rk4_step(const Dynamics& f, const Vector& x, const Vector& u, double dt) {
  const Vector k1 = f(x, u);
  const Vector k2 = f(x + 0.5 * dt * k1, u);
  const Vector k3 = f(x + 0.5 * dt * k2, u);
  const Vector k4 = f(x + dt * k3, u);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return svd(m).singular_values(0);
}

Vector flatten(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw InvalidArgument("unflatten: vector of length " + std::to_string(v.size()) +
                          " does not reshape to " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

}  // namespace msopt
