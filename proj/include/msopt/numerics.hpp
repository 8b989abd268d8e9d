#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace msopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when an input violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative numerical routine fails to converge or produces
/// non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SvdResult {
  Matrix u;                ///< orthonormal columns
  Vector singular_values;  ///< nonnegative, descending
  Matrix vt;               ///< orthonormal rows
};

struct EigResult {
  Vector eigenvalues;  ///< ascending
  Matrix eigenvectors;  ///< orthonormal columns, eigenvectors.col(i) <-> eigenvalues(i)
};

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

/// Thin SVD. Throws InvalidArgument on non-finite input and NumericalError
/// if the Jacobi sweeps fail to converge.
SvdResult svd(const Matrix& m);

/// Eigendecomposition of a symmetric matrix. Rejects inputs whose asymmetry
/// exceeds 1e-12 (max-abs entry of m - m^T, relative to max(1, |m|_max)).
EigResult sym_eig(const Matrix& m);

/// log(sum(exp(values))) with max-shift. Throws on empty input.
double log_sum_exp(std::span<const double> values);

inline constexpr double kDefaultFdStep = 1e-5;

using VectorFunction = std::function<Vector(const Vector&)>;
using ScalarFunction = std::function<double(const Vector&)>;

/// Central-difference Jacobian: column i is (f(x + h e_i) - f(x - h e_i)) / 2h.
Matrix fd_jacobian(const VectorFunction& f, const Vector& x, double h = kDefaultFdStep);

/// Central-difference gradient of a scalar function.
Vector fd_gradient(const ScalarFunction& f, const Vector& x, double h = kDefaultFdStep);

/// Continuous-time dynamics x' = f(x, u).
using Dynamics = std::function<Vector(const Vector& state, const Vector& input)>;

/// One classical fourth-order Runge-Kutta step with the input held constant.
Vector rk4_step(const Dynamics& f, const Vector& x, const Vector& u, double dt);

/// Largest singular value.
double operator_norm(const Matrix& m);

/// Row-major flattening between n x n matrices and ambient vectors.
Vector flatten(const Matrix& m);
Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace msopt
