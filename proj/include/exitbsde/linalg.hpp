#pragma once

#include <Eigen/Dense>

namespace exitbsde {

// Spatial dimension is small (d <= 10); fixed-capacity types keep the
// per-step simulation loops free of heap traffic.
inline constexpr int kMaxDim = 10;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Spectral norm (largest |eigenvalue|) of a symmetric matrix.
double spectral_norm(const Mat& m);

}  // namespace exitbsde
