#pragma once

#include <Eigen/Dense>

namespace bohm::linalg {

struct SymmetricEigen {
  Eigen::VectorXd values;  // ascending
  Eigen::MatrixXd vectors;  // columns, orthonormal
};

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  Eigen::MatrixXcd vectors;
};

/// Dense symmetric eigen-decomposition (LAPACK divide and conquer).
SymmetricEigen symmetric_eigen(Eigen::MatrixXd a, bool with_vectors = true);
HermitianEigen hermitian_eigen(Eigen::MatrixXcd a, bool with_vectors = true);

/// Some OpenBLAS builds pick kernels on newer CPUs that return inaccurate
/// eigenvectors. When OPENBLAS_CORETYPE is unset this sets it to Haswell and
/// re-executes the program with the same argv. Call first thing in main().
void ensure_blas_kernels(char** argv);

}  // namespace bohm::linalg
