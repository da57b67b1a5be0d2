#pragma once

#include <Eigen/Core>
#include <complex>

namespace rl {

// Ball charts live in dimension n+1 <= 4. Max-size storage keeps the small
// vectors and matrices off the heap inside integrator right-hand sides.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace rl
