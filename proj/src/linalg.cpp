#include "vista/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace vista::linalg {

Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(m));
    if (eig.info() != Eigen::Success) throw InferenceError("eigendecomposition failed");
    const Vector& lambda = eig.eigenvalues();
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if (lambda.minCoeff() < -1e-10 * scale) {
        throw InferenceError("covariance is not positive semidefinite");
    }
    const Vector root = lambda.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace vista::linalg
