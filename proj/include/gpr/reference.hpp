#ifndef GPR_REFERENCE_HPP
#define GPR_REFERENCE_HPP

#include <vector>

#include "gpr/bscan.hpp"
#include "gpr/wavelet.hpp"

// Plain serial implementations of the data-parallel kernels. They are the
// ground truth the OpenMP versions are tested against and the baseline the
// benchmark target compares with. Keep them simple; do not optimize.
namespace gpr::ref {

BScan median_filter(const BScan& scan, int k);

WaveletPyramid dwt2(const BScan& image);
BScan idwt2(const WaveletPyramid& p);

// Dense RBF Gram matrix K[i][j] = exp(-gamma * ||x_i - x_j||^2).
std::vector<double> gram_rbf(const std::vector<std::vector<double>>& x, double gamma);

// 3x3 same-padding convolution over a CHW batch, serial.
void conv3x3_batch(const float* in, int batch, int cin, int h, int w,
                   const float* weights, const float* bias, int cout, float* out);

}  // namespace gpr::ref

#endif
