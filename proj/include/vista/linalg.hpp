#pragma once

// Small dense linear-algebra helpers used by inference and estimation.

#include "vista/core_types.hpp"

#include <cmath>
#include <optional>

namespace vista::linalg {

inline void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Cholesky factor of a symmetric positive-definite matrix. On failure retries
/// once with `jitter_scale * trace / d` added to the diagonal. Returns nullopt
/// if both attempts fail.
template <class M>
std::optional<Eigen::LLT<M>> robust_llt(const M& m, double jitter_scale) {
    Eigen::LLT<M> llt(m);
    if (llt.info() == Eigen::Success) return llt;
    double jitter = jitter_scale * std::abs(m.trace()) / static_cast<double>(m.rows());
    if (!(jitter > 0.0)) jitter = jitter_scale;
    M bumped = m;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt;
    return std::nullopt;
}

/// Symmetric square root L with L L^T = m for a PSD matrix (eigenvalues
/// clamped at zero). Throws InferenceError if an eigenvalue is below
/// -1e-10 * max(1, |lambda_max|).
Matrix psd_sqrt(const Matrix& m);

/// Log-determinant from a Cholesky factorization.
template <class M>
double log_det(const Eigen::LLT<M>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace vista::linalg
