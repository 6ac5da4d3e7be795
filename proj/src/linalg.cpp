#include "ssanova/linalg.hpp"

#include "ssanova/errors.hpp"

#ifdef SSANOVA_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace ssanova {

SymEig sym_eig_desc(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols())
        throw ArgumentError("sym_eig_desc requires a square matrix");
    const Eigen::Index n = A.rows();

    SymEig out;
#ifdef SSANOVA_HAVE_LAPACKE
    out.vectors = A;
    out.values.resize(n);
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                       out.vectors.data(), static_cast<lapack_int>(n), out.values.data());
    if (info != 0)
        throw NumericalError("dsyevd failed to converge (info=" + std::to_string(info) + ")");
    // dsyevd returns ascending order.
    out.values.reverseInPlace();
    out.vectors = out.vectors.rowwise().reverse().eval();
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigendecomposition failed to converge");
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
#endif
    return out;
}

} // namespace ssanova
