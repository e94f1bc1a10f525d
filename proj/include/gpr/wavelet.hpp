#ifndef GPR_WAVELET_HPP
#define GPR_WAVELET_HPP

#include <array>
#include <vector>

#include "gpr/bscan.hpp"

namespace gpr {

// Daubechies-2 analysis filter pair, derived in code from sqrt(2)/sqrt(3)
// rather than hard-coded decimals. The highpass is the quadrature mirror
// g[k] = (-1)^k h[3-k].
struct Db2Filter {
    std::array<double, 4> lowpass;
    std::array<double, 4> highpass;
    static Db2Filter make();
};

// Single-level separable decomposition of an image: rows are filtered
// first (horizontal split into L/H), then columns (split into the four
// subbands). Each subband is ceil(rows/2) x ceil(cols/2).
//
// The transform is periodized; an odd-length signal is first extended by
// one whole-point-symmetric sample so the circulant filter bank stays
// orthonormal. src_rows/src_cols record the pre-padding size so the
// inverse can restore odd dimensions exactly.
struct WaveletPyramid {
    int src_rows = 0, src_cols = 0;
    int band_rows = 0, band_cols = 0;
    double dt_ns = 1.0, dx_m = 0.02, origin_x_m = 0.0;
    std::vector<double> ll, lh, hl, hh; // row-major band_rows*band_cols
    static constexpr int level = 1;
};

// Forward transform. Requires rows >= 4 and cols >= 4 (filter support).
WaveletPyramid dwt2(const BScan& image);

// Inverse transform; idwt2(dwt2(x)) == x to machine precision.
BScan idwt2(const WaveletPyramid& p);

// Coefficient merge rule for fusion. AbsMax keeps the detail coefficient
// with the larger magnitude (sign preserved); SignedMax is the literal
// elementwise maximum. The approximation band always takes the minimum.
enum class DetailMerge { AbsMax, SignedMax };

WaveletPyramid merge(const WaveletPyramid& pa, const WaveletPyramid& pb,
                     DetailMerge mode = DetailMerge::AbsMax);

// Wavelet fusion of a normal segment with a simulated segment:
// idwt2(merge(dwt2(normal), dwt2(simulated))). The simulated image is
// bilinearly resampled to the normal's grid first when shapes differ.
BScan fuse(const BScan& normal, const BScan& simulated,
           DetailMerge mode = DetailMerge::AbsMax);

}  // namespace gpr

#endif
