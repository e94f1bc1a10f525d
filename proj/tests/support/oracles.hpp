#ifndef GPR_TESTS_ORACLES_HPP
#define GPR_TESTS_ORACLES_HPP

// Independent brute-force oracles used to check the production
// implementations. These deliberately avoid the fast-path algorithms:
// the wavelet oracle projects onto explicitly constructed 2-D basis
// atoms instead of running a separable transform, and the SVDD oracle
// maximizes the dual by refined exhaustive grid search instead of SMO.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "gpr/bscan.hpp"
#include "gpr/wavelet.hpp"

namespace oracle {

// ---- wavelet -------------------------------------------------------------

// Periodized filter atom of length n placed at output index m:
// atom[(2m + k) % n] += tap[k].
inline std::vector<double> atom1d(const std::array<double, 4>& taps, int n, int m) {
    std::vector<double> a(n, 0.0);
    for (int k = 0; k < 4; ++k) a[(2 * m + k) % n] += taps[k];
    return a;
}

// Full 2-D single-level db2 decomposition by direct projection: every
// coefficient is the inner product of the (padded) image with an outer
// product of two 1-D atoms. O(n^4), for small test images only.
inline gpr::WaveletPyramid dwt2_bruteforce(const gpr::BScan& img) {
    const gpr::Db2Filter f = gpr::Db2Filter::make();
    const int rows = img.rows, cols = img.cols;
    const int pr = rows + (rows % 2), pc = cols + (cols % 2);
    // whole-point symmetric padding to even size
    std::vector<std::vector<double>> x(pr, std::vector<double>(pc, 0.0));
    for (int r = 0; r < pr; ++r) {
        const int rr = (r < rows) ? r : rows - 2;
        for (int c = 0; c < pc; ++c) {
            const int cc = (c < cols) ? c : cols - 2;
            x[r][c] = img.at(rr, cc);
        }
    }
    gpr::WaveletPyramid p;
    p.src_rows = rows;
    p.src_cols = cols;
    p.band_rows = pr / 2;
    p.band_cols = pc / 2;
    p.dt_ns = img.dt_ns;
    p.dx_m = img.dx_m;
    p.origin_x_m = img.origin_x_m;
    const std::size_t n = static_cast<std::size_t>(p.band_rows) * p.band_cols;
    p.ll.assign(n, 0.0);
    p.lh.assign(n, 0.0);
    p.hl.assign(n, 0.0);
    p.hh.assign(n, 0.0);
    for (int m = 0; m < p.band_rows; ++m) {
        const auto col_lo = atom1d(f.lowpass, pr, m);
        const auto col_hi = atom1d(f.highpass, pr, m);
        for (int q = 0; q < p.band_cols; ++q) {
            const auto row_lo = atom1d(f.lowpass, pc, q);
            const auto row_hi = atom1d(f.highpass, pc, q);
            double ll = 0.0, lh = 0.0, hl = 0.0, hh = 0.0;
            for (int u = 0; u < pr; ++u)
                for (int v = 0; v < pc; ++v) {
                    const double px = x[u][v];
                    ll += px * col_lo[u] * row_lo[v];
                    lh += px * col_hi[u] * row_lo[v];
                    hl += px * col_lo[u] * row_hi[v];
                    hh += px * col_hi[u] * row_hi[v];
                }
            const std::size_t i = static_cast<std::size_t>(m) * p.band_cols + q;
            p.ll[i] = ll;
            p.lh[i] = lh;
            p.hl[i] = hl;
            p.hh[i] = hh;
        }
    }
    return p;
}

// ---- SVDD dual -----------------------------------------------------------

// Dual objective: sum_i a_i K_ii - sum_ij a_i a_j K_ij.
inline double svdd_dual_objective(const std::vector<double>& alpha,
                                  const std::vector<double>& gram, std::size_t n) {
    double lin = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lin += alpha[i] * gram[i * n + i];
        for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * alpha[j] * gram[i * n + j];
    }
    return lin - quad;
}

// Exhaustive grid over the constraint set {sum alpha = 1, 0 <= alpha <= C}
// at `coarse_step` resolution, then local exhaustive refinement around the
// incumbent with the step halved until it reaches `final_step`. The dual is
// concave on a convex set, so the refinement converges to the global
// maximum.
inline double svdd_dual_gridsearch(const std::vector<double>& gram, std::size_t n, double c,
                                   double coarse_step = 0.05, double final_step = 1e-3) {
    const int units_total = static_cast<int>(std::lround(1.0 / coarse_step));
    const int per_coord = static_cast<int>(std::floor(c / coarse_step + 1e-12));
    double best = -1e300;
    std::vector<double> best_alpha(n, 0.0);
    {
        std::vector<int> u(n, 0);
        std::vector<double> a(n, 0.0);
        std::function<void(std::size_t, int)> go = [&](std::size_t idx, int left) {
            if (idx == n - 1) {
                if (left > per_coord) return;
                u[idx] = left;
                for (std::size_t i = 0; i < n; ++i) a[i] = u[i] * coarse_step;
                const double v = svdd_dual_objective(a, gram, n);
                if (v > best) {
                    best = v;
                    best_alpha = a;
                }
                return;
            }
            for (int k = 0; k <= std::min(left, per_coord); ++k) {
                u[idx] = k;
                go(idx + 1, left - k);
            }
        };
        go(0, units_total);
    }

    // refinement: exhaustive +-4 steps on the first n-1 coordinates, the
    // last coordinate takes the slack so the simplex constraint is exact
    for (double h = coarse_step / 2.0; h >= final_step / 2.0; h /= 2.0) {
        bool improved = true;
        while (improved) {
            improved = false;
            std::vector<int> delta(n - 1, -4);
            std::vector<double> a(n, 0.0);
            while (true) {
                bool feasible = true;
                double s = 0.0;
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    a[i] = best_alpha[i] + delta[i] * h;
                    if (a[i] < -1e-12 || a[i] > c + 1e-12) {
                        feasible = false;
                        break;
                    }
                    a[i] = std::clamp(a[i], 0.0, c);
                    s += a[i];
                }
                if (feasible) {
                    a[n - 1] = 1.0 - s;
                    if (a[n - 1] >= -1e-12 && a[n - 1] <= c + 1e-12) {
                        a[n - 1] = std::clamp(a[n - 1], 0.0, c);
                        const double v = svdd_dual_objective(a, gram, n);
                        if (v > best + 1e-15) {
                            best = v;
                            best_alpha = a;
                            improved = true;
                        }
                    }
                }
                std::size_t i = 0;
                for (; i + 1 < n; ++i) {
                    if (delta[i] < 4) {
                        ++delta[i];
                        break;
                    }
                    delta[i] = -4;
                }
                if (i + 1 >= n) break;
            }
        }
    }
    return best;
}

}  // namespace oracle

#endif
