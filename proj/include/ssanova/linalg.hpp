#pragma once

#include <Eigen/Dense>

namespace ssanova {

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted nonincreasing
/// and eigenvectors in matching column order (orthonormal).
struct SymEig {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Backed by LAPACKE dsyevd when available (configure-time choice), otherwise
/// Eigen's SelfAdjointEigenSolver. Throws NumericalError on non-convergence.
SymEig sym_eig_desc(const Eigen::MatrixXd& A);

} // namespace ssanova
