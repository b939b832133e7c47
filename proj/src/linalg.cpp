#include "bohm/linalg.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>

#include "bohm/error.hpp"

namespace bohm::linalg {

namespace {

// Residual ||A v - lambda v|| on a spread of columns, relative to ||A||_max.
template <class Matrix>
bool spot_check(const Matrix& a, const Eigen::VectorXd& values, const Matrix& vectors) {
  const Eigen::Index n = a.rows();
  if (n == 0) return true;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff()) * static_cast<double>(n);
  const Eigen::Index probes = std::min<Eigen::Index>(n, 16);
  for (Eigen::Index k = 0; k < probes; ++k) {
    const Eigen::Index c = (k * (n - 1)) / std::max<Eigen::Index>(1, probes - 1);
    const double r = (a * vectors.col(c) - values(c) * vectors.col(c)).norm();
    const double u = std::abs(vectors.col(c).norm() - 1.0);
    if (r > 1e-9 * scale || u > 1e-9) return false;
  }
  return true;
}

void warn_fallback() {
  static bool warned = false;
  if (!warned) {
    std::cerr << "warning: LAPACK eigenvectors failed the residual check; "
                 "falling back to Eigen's solver (set OPENBLAS_CORETYPE=Haswell)\n";
    warned = true;
  }
}

}  // namespace

void ensure_blas_kernels(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr || argv == nullptr) return;
  ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
  ::execv("/proc/self/exe", argv);
  // exec failed: carry on, the residual check still guards results
}

SymmetricEigen symmetric_eigen(Eigen::MatrixXd a, bool with_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  if (a.cols() != a.rows()) throw Error("symmetric_eigen needs a square matrix");
  SymmetricEigen out;
  out.values.resize(n);
  if (n == 0) return out;
  Eigen::MatrixXd original;
  if (with_vectors) original = a;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L', n,
                                         a.data(), n, out.values.data());
  if (info != 0) throw ConvergenceFailure("dsyevd failed, info=" + std::to_string(info));
  if (!with_vectors) return out;
  if (spot_check(original, out.values, a)) {
    out.vectors = std::move(a);
    return out;
  }
  warn_fallback();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(original);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("symmetric eigensolver failed");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  return out;
}

HermitianEigen hermitian_eigen(Eigen::MatrixXcd a, bool with_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  if (a.cols() != a.rows()) throw Error("hermitian_eigen needs a square matrix");
  HermitianEigen out;
  out.values.resize(n);
  if (n == 0) return out;
  Eigen::MatrixXcd original;
  if (with_vectors) original = a;
  const lapack_int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L', n,
                     a.data(), n, out.values.data());
  if (info != 0) throw ConvergenceFailure("zheevd failed, info=" + std::to_string(info));
  if (!with_vectors) return out;
  if (spot_check(original, out.values, a)) {
    out.vectors = std::move(a);
    return out;
  }
  warn_fallback();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(original);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("hermitian eigensolver failed");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  return out;
}

}  // namespace bohm::linalg
