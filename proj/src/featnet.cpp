#include "gpr/featnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "gpr/parallel.hpp"
#include "gpr/rng.hpp"

namespace gpr {

namespace {

constexpr int kStages = 4;
constexpr std::array<int, 5> kWidths = {1, 8, 16, 32, 64}; // input + 4 stages

struct Geometry {
    std::array<int, 5> h, w; // spatial dims entering each stage (index 0 = input)
    std::size_t act_elems;   // scratch sized for the largest conv output

    Geometry(int rows, int cols) {
        h[0] = rows;
        w[0] = cols;
        for (int s = 0; s < kStages; ++s) {
            if (h[s] < 2 || w[s] < 2)
                throw std::invalid_argument("ConvNet: input too small, needs >= 16x16");
            h[s + 1] = h[s] / 2;
            w[s + 1] = w[s] / 2;
        }
        act_elems = static_cast<std::size_t>(ConvNet<float>::kEmbedDim);
        for (int s = 0; s < kStages; ++s)
            act_elems = std::max(act_elems,
                                 static_cast<std::size_t>(kWidths[s + 1]) * h[s] * w[s]);
    }
};

// parameter blob order: per stage conv w then b, then fc w/b, head w/b
std::vector<std::size_t> blob_sizes_impl() {
    std::vector<std::size_t> sizes;
    for (int s = 0; s < kStages; ++s) {
        sizes.push_back(static_cast<std::size_t>(kWidths[s + 1]) * kWidths[s] * 9);
        sizes.push_back(kWidths[s + 1]);
    }
    sizes.push_back(static_cast<std::size_t>(ConvNet<float>::kEmbedDim) * kWidths[kStages]);
    sizes.push_back(ConvNet<float>::kEmbedDim);
    sizes.push_back(2 * static_cast<std::size_t>(ConvNet<float>::kEmbedDim));
    sizes.push_back(2);
    return sizes;
}

std::vector<std::size_t> blob_offsets() {
    std::vector<std::size_t> offs;
    std::size_t o = 0;
    for (std::size_t s : blob_sizes_impl()) {
        offs.push_back(o);
        o += s;
    }
    offs.push_back(o); // total
    return offs;
}

// ---- conv kernels ---------------------------------------------------------

// y[oc] = bias[oc] + sum_ic x[ic] * w[oc][ic], 3x3, zero padding.
template <class T>
void conv3x3_same(const T* in, int cin, int h, int w, const T* wts, const T* bias, T* out,
                  int cout, const T* zrow) {
    for (int oc = 0; oc < cout; ++oc) {
        T* o = out + static_cast<std::size_t>(oc) * h * w;
        const T b = bias ? bias[oc] : T(0);
        for (int i = 0; i < h * w; ++i) o[i] = b;
        for (int ic = 0; ic < cin; ++ic) {
            const T* wk = wts + (static_cast<std::size_t>(oc) * cin + ic) * 9;
            const T* ip = in + static_cast<std::size_t>(ic) * h * w;
            const T w0 = wk[0], w1 = wk[1], w2 = wk[2], w3 = wk[3], w4 = wk[4], w5 = wk[5],
                    w6 = wk[6], w7 = wk[7], w8 = wk[8];
            for (int r = 0; r < h; ++r) {
                const T* rm = r > 0 ? ip + static_cast<std::size_t>(r - 1) * w : zrow;
                const T* r0 = ip + static_cast<std::size_t>(r) * w;
                const T* rp = r + 1 < h ? ip + static_cast<std::size_t>(r + 1) * w : zrow;
                T* orow = o + static_cast<std::size_t>(r) * w;
                for (int c = 1; c + 1 < w; ++c)
                    orow[c] += w0 * rm[c - 1] + w1 * rm[c] + w2 * rm[c + 1] + w3 * r0[c - 1] +
                               w4 * r0[c] + w5 * r0[c + 1] + w6 * rp[c - 1] + w7 * rp[c] +
                               w8 * rp[c + 1];
                orow[0] += w1 * rm[0] + w2 * rm[1] + w4 * r0[0] + w5 * r0[1] + w7 * rp[0] +
                           w8 * rp[1];
                if (w > 1) {
                    const int c = w - 1;
                    orow[c] += w0 * rm[c - 1] + w1 * rm[c] + w3 * r0[c - 1] + w4 * r0[c] +
                               w6 * rp[c - 1] + w7 * rp[c];
                }
            }
        }
    }
}

// dx[ic] += sum_oc dz[oc] (*) rot180(w[oc][ic]) -- the same-padding adjoint.
template <class T>
void conv3x3_backward_input(const T* dz, int cout, int h, int w, const T* wts, int cin, T* dx,
                            const T* zrow) {
    for (int ic = 0; ic < cin; ++ic) {
        T* o = dx + static_cast<std::size_t>(ic) * h * w;
        std::memset(o, 0, sizeof(T) * static_cast<std::size_t>(h) * w);
        for (int oc = 0; oc < cout; ++oc) {
            const T* wk = wts + (static_cast<std::size_t>(oc) * cin + ic) * 9;
            // rotated taps
            const T w0 = wk[8], w1 = wk[7], w2 = wk[6], w3 = wk[5], w4 = wk[4], w5 = wk[3],
                    w6 = wk[2], w7 = wk[1], w8 = wk[0];
            const T* ip = dz + static_cast<std::size_t>(oc) * h * w;
            for (int r = 0; r < h; ++r) {
                const T* rm = r > 0 ? ip + static_cast<std::size_t>(r - 1) * w : zrow;
                const T* r0 = ip + static_cast<std::size_t>(r) * w;
                const T* rp = r + 1 < h ? ip + static_cast<std::size_t>(r + 1) * w : zrow;
                T* orow = o + static_cast<std::size_t>(r) * w;
                for (int c = 1; c + 1 < w; ++c)
                    orow[c] += w0 * rm[c - 1] + w1 * rm[c] + w2 * rm[c + 1] + w3 * r0[c - 1] +
                               w4 * r0[c] + w5 * r0[c + 1] + w6 * rp[c - 1] + w7 * rp[c] +
                               w8 * rp[c + 1];
                orow[0] += w1 * rm[0] + w2 * rm[1] + w4 * r0[0] + w5 * r0[1] + w7 * rp[0] +
                           w8 * rp[1];
                if (w > 1) {
                    const int c = w - 1;
                    orow[c] += w0 * rm[c - 1] + w1 * rm[c] + w3 * r0[c - 1] + w4 * r0[c] +
                               w6 * rp[c - 1] + w7 * rp[c];
                }
            }
        }
    }
}

// dw[oc][ic][k] += sum_{r,c} dz[oc][r][c] * x[ic][r+kr-1][c+kc-1]; db[oc] += sum dz[oc].
// These dot products only vectorize because this file is compiled with
// -fassociative-math (see src/CMakeLists.txt); left scalar they dominate
// the whole training run.
template <class T>
void conv3x3_backward_params(const T* x, int cin, int h, int w, const T* dz, int cout, T* dw,
                             T* db) {
    for (int oc = 0; oc < cout; ++oc) {
        const T* z = dz + static_cast<std::size_t>(oc) * h * w;
        T bsum = 0;
        for (int i = 0; i < h * w; ++i) bsum += z[i];
        db[oc] += bsum;
        for (int ic = 0; ic < cin; ++ic) {
            const T* ip = x + static_cast<std::size_t>(ic) * h * w;
            T* wk = dw + (static_cast<std::size_t>(oc) * cin + ic) * 9;
            for (int kr = -1; kr <= 1; ++kr) {
                const int r_lo = std::max(0, -kr), r_hi = h - std::max(0, kr);
                T acc0 = 0, acc1 = 0, acc2 = 0;
                for (int r = r_lo; r < r_hi; ++r) {
                    const T* zr = z + static_cast<std::size_t>(r) * w;
                    const T* xr = ip + static_cast<std::size_t>(r + kr) * w;
                    T s0 = 0, s1 = 0, s2 = 0;
                    for (int c = 1; c < w - 1; ++c) {
                        const T zv = zr[c];
                        s0 += zv * xr[c - 1];
                        s1 += zv * xr[c];
                        s2 += zv * xr[c + 1];
                    }
                    // edge columns
                    s1 += zr[0] * xr[0];
                    s2 += zr[0] * xr[1];
                    s0 += zr[w - 1] * xr[w - 2];
                    s1 += zr[w - 1] * xr[w - 1];
                    acc0 += s0;
                    acc1 += s1;
                    acc2 += s2;
                }
                wk[(kr + 1) * 3 + 0] += acc0;
                wk[(kr + 1) * 3 + 1] += acc1;
                wk[(kr + 1) * 3 + 2] += acc2;
            }
        }
    }
}

template <class T>
void relu_inplace(T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

// 2x2 max pool (floor), recording the winning input index for backward.
template <class T>
void maxpool2(const T* in, int ch, int h, int w, T* out, std::int32_t* argmax) {
    const int oh = h / 2, ow = w / 2;
    for (int c = 0; c < ch; ++c) {
        const T* ip = in + static_cast<std::size_t>(c) * h * w;
        T* op = out + static_cast<std::size_t>(c) * oh * ow;
        std::int32_t* ap = argmax + static_cast<std::size_t>(c) * oh * ow;
        for (int r = 0; r < oh; ++r)
            for (int q = 0; q < ow; ++q) {
                const int i00 = (2 * r) * w + 2 * q;
                int best = i00;
                T v = ip[i00];
                if (ip[i00 + 1] > v) { v = ip[i00 + 1]; best = i00 + 1; }
                if (ip[i00 + w] > v) { v = ip[i00 + w]; best = i00 + w; }
                if (ip[i00 + w + 1] > v) { v = ip[i00 + w + 1]; best = i00 + w + 1; }
                op[r * ow + q] = v;
                ap[r * ow + q] = best;
            }
    }
}

// ---- per-sample workspace --------------------------------------------------

template <class T>
struct Workspace {
    // activations per stage: conv output (post ReLU) and pooled output
    std::array<std::vector<T>, kStages> conv_out, pool_out;
    std::array<std::vector<std::int32_t>, kStages> argmax;
    std::vector<T> input, gap, embed, logits;
    // backward scratch
    std::vector<T> d_a, d_b;
    std::vector<T> zrow;

    explicit Workspace(const Geometry& g) {
        for (int s = 0; s < kStages; ++s) {
            conv_out[s].resize(static_cast<std::size_t>(kWidths[s + 1]) * g.h[s] * g.w[s]);
            pool_out[s].resize(static_cast<std::size_t>(kWidths[s + 1]) * g.h[s + 1] * g.w[s + 1]);
            argmax[s].resize(pool_out[s].size());
        }
        input.resize(static_cast<std::size_t>(g.h[0]) * g.w[0]);
        gap.resize(kWidths[kStages]);
        embed.resize(ConvNet<T>::kEmbedDim);
        logits.resize(2);
        d_a.resize(g.act_elems);
        d_b.resize(g.act_elems);
        zrow.assign(static_cast<std::size_t>(std::max(g.w[0], 4)), T(0));
    }
};

template <class T>
void prepare_input(const BScan& img, const Geometry& g, T* out) {
    const BScan* src = &img;
    BScan resized;
    if (img.rows != g.h[0] || img.cols != g.w[0]) {
        resized = resize_bilinear(img, g.h[0], g.w[0]);
        src = &resized;
    }
    double mean = 0.0;
    for (double v : src->data) {
        if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input amplitude");
        mean += v;
    }
    const std::size_t n = src->data.size();
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : src->data) var += (v - mean) * (v - mean);
    const double sd = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<T>((src->data[i] - mean) / sd);
}

// Full forward pass; returns the two logits. Activations stay in ws for
// the backward pass.
template <class T>
void forward_pass(const std::vector<T>& p, const Geometry& g, Workspace<T>& ws) {
    static const std::vector<std::size_t> offs = blob_offsets();
    const T* in = ws.input.data();
    for (int s = 0; s < kStages; ++s) {
        const T* wts = p.data() + offs[2 * s];
        const T* bias = p.data() + offs[2 * s + 1];
        conv3x3_same(in, kWidths[s], g.h[s], g.w[s], wts, bias, ws.conv_out[s].data(),
                     kWidths[s + 1], ws.zrow.data());
        relu_inplace(ws.conv_out[s].data(), ws.conv_out[s].size());
        maxpool2(ws.conv_out[s].data(), kWidths[s + 1], g.h[s], g.w[s], ws.pool_out[s].data(),
                 ws.argmax[s].data());
        in = ws.pool_out[s].data();
    }
    // global average pool
    const int ch = kWidths[kStages];
    const int hw = g.h[kStages] * g.w[kStages];
    for (int c = 0; c < ch; ++c) {
        T acc = 0;
        const T* ip = ws.pool_out[kStages - 1].data() + static_cast<std::size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) acc += ip[i];
        ws.gap[c] = acc / static_cast<T>(hw);
    }
    // embedding
    const T* fw = p.data() + offs[2 * kStages];
    const T* fb = p.data() + offs[2 * kStages + 1];
    const int d = ConvNet<T>::kEmbedDim;
    for (int j = 0; j < d; ++j) {
        T acc = fb[j];
        const T* row = fw + static_cast<std::size_t>(j) * ch;
        for (int i = 0; i < ch; ++i) acc += row[i] * ws.gap[i];
        ws.embed[j] = acc;
    }
    // head
    const T* hw_ = p.data() + offs[2 * kStages + 2];
    const T* hb = p.data() + offs[2 * kStages + 3];
    for (int k = 0; k < 2; ++k) {
        T acc = hb[k];
        const T* row = hw_ + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) acc += row[j] * ws.embed[j];
        ws.logits[k] = acc;
    }
}

inline std::array<double, 2> softmax2(double z0, double z1) {
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    const double s = e0 + e1;
    return {e0 / s, e1 / s};
}

inline double bce_one(double p1, int label) {
    const double p = std::clamp(p1, 1e-7, 1.0 - 1e-7);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// Backward from dlogits; accumulates parameter grads into `grad`.
template <class T>
void backward_pass(const std::vector<T>& p, const Geometry& g, Workspace<T>& ws,
                   const std::array<T, 2>& dlogits, std::vector<T>& grad) {
    static const std::vector<std::size_t> offs = blob_offsets();
    const int d = ConvNet<T>::kEmbedDim;
    const int ch = kWidths[kStages];
    const T* hw_ = p.data() + offs[2 * kStages + 2];
    T* d_embed = ws.d_a.data(); // d values
    // head grads
    {
        T* ghw = grad.data() + offs[2 * kStages + 2];
        T* ghb = grad.data() + offs[2 * kStages + 3];
        for (int k = 0; k < 2; ++k) {
            ghb[k] += dlogits[k];
            T* grow = ghw + static_cast<std::size_t>(k) * d;
            for (int j = 0; j < d; ++j) grow[j] += dlogits[k] * ws.embed[j];
        }
        for (int j = 0; j < d; ++j)
            d_embed[j] = hw_[j] * dlogits[0] + hw_[static_cast<std::size_t>(d) + j] * dlogits[1];
    }
    // fc grads -> d_gap
    std::array<T, 64> d_gap{};
    {
        const T* fw = p.data() + offs[2 * kStages];
        T* gfw = grad.data() + offs[2 * kStages];
        T* gfb = grad.data() + offs[2 * kStages + 1];
        for (int j = 0; j < d; ++j) {
            const T dj = d_embed[j];
            gfb[j] += dj;
            T* grow = gfw + static_cast<std::size_t>(j) * ch;
            const T* frow = fw + static_cast<std::size_t>(j) * ch;
            for (int i = 0; i < ch; ++i) {
                grow[i] += dj * ws.gap[i];
                d_gap[i] += dj * frow[i];
            }
        }
    }
    // GAP backward into the last pooled map
    const int hw4 = g.h[kStages] * g.w[kStages];
    T* d_pool = ws.d_a.data(); // reuse; d_embed no longer needed
    {
        const T inv = T(1) / static_cast<T>(hw4);
        for (int c = 0; c < ch; ++c) {
            const T v = d_gap[c] * inv;
            T* dp = d_pool + static_cast<std::size_t>(c) * hw4;
            for (int i = 0; i < hw4; ++i) dp[i] = v;
        }
    }
    // stages in reverse: unpool -> ReLU mask -> conv backward
    for (int s = kStages - 1; s >= 0; --s) {
        const int cout = kWidths[s + 1];
        const std::size_t conv_elems = static_cast<std::size_t>(cout) * g.h[s] * g.w[s];
        T* d_conv = ws.d_b.data();
        std::memset(d_conv, 0, sizeof(T) * conv_elems);
        const int ohw = g.h[s + 1] * g.w[s + 1];
        for (int c = 0; c < cout; ++c) {
            const std::int32_t* am = ws.argmax[s].data() + static_cast<std::size_t>(c) * ohw;
            const T* dp = d_pool + static_cast<std::size_t>(c) * ohw;
            T* dc = d_conv + static_cast<std::size_t>(c) * g.h[s] * g.w[s];
            for (int i = 0; i < ohw; ++i) dc[am[i]] += dp[i];
        }
        // ReLU mask (conv_out holds post-ReLU values)
        const T* a = ws.conv_out[s].data();
        for (std::size_t i = 0; i < conv_elems; ++i)
            if (!(a[i] > T(0))) d_conv[i] = T(0);
        const T* x = (s == 0) ? ws.input.data() : ws.pool_out[s - 1].data();
        conv3x3_backward_params(x, kWidths[s], g.h[s], g.w[s], d_conv, cout,
                                grad.data() + offs[2 * s], grad.data() + offs[2 * s + 1]);
        if (s > 0) {
            const T* wts = p.data() + offs[2 * s];
            conv3x3_backward_input(d_conv, cout, g.h[s], g.w[s], wts, kWidths[s], d_pool,
                                   ws.zrow.data());
        }
    }
}

}  // namespace

// ---- ConvNet ----------------------------------------------------------------

template <class T>
ConvNet<T>::ConvNet(int input_rows, int input_cols) : rows_(input_rows), cols_(input_cols) {
    Geometry g(input_rows, input_cols); // validates the size
    (void)g;
    params_.assign(blob_offsets().back(), T(0));
}

template <class T>
ConvNet<T> ConvNet<T>::random_init(int input_rows, int input_cols, std::uint64_t seed) {
    ConvNet net(input_rows, input_cols);
    Rng rng(Rng::mix(seed, 0xF3A7));
    const auto sizes = blob_sizes_impl();
    std::size_t off = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        const bool is_bias = (b % 2) == 1;
        if (!is_bias) {
            std::size_t fan_in;
            if (b / 2 < kStages)
                fan_in = static_cast<std::size_t>(kWidths[b / 2]) * 9;
            else if (b == 2 * kStages)
                fan_in = kWidths[kStages];
            else
                fan_in = kEmbedDim;
            const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (std::size_t i = 0; i < sizes[b]; ++i)
                net.params_[off + i] = static_cast<T>(sd * rng.normal());
        }
        off += sizes[b];
    }
    return net;
}

template <class T>
std::vector<std::size_t> ConvNet<T>::blob_sizes() {
    return blob_sizes_impl();
}

// ---- public ops ---------------------------------------------------------------

template <class T>
ForwardResult forward(const ConvNet<T>& net, const BScan& img) {
    Geometry g(net.input_rows(), net.input_cols());
    Workspace<T> ws(g);
    prepare_input(img, g, ws.input.data());
    forward_pass(net.params(), g, ws);
    ForwardResult r;
    r.embedding.assign(ws.embed.begin(), ws.embed.end());
    r.probs = softmax2(static_cast<double>(ws.logits[0]), static_cast<double>(ws.logits[1]));
    return r;
}

double bce_loss(const std::vector<double>& probs, const std::vector<int>& labels) {
    if (probs.size() != labels.size() || probs.empty())
        throw std::invalid_argument("bce_loss: probs/labels size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("bce_loss: labels must be 0 or 1");
        acc += bce_one(probs[i], labels[i]);
    }
    return acc / static_cast<double>(probs.size());
}

template <class T>
double batch_loss_and_grad(const ConvNet<T>& net, const std::vector<const BScan*>& batch,
                           const std::vector<int>& labels, std::vector<T>* grad,
                           std::vector<double>* probs_out) {
    if (batch.empty() || batch.size() != labels.size())
        throw std::invalid_argument("batch_loss_and_grad: batch/labels size mismatch");
    const int n = static_cast<int>(batch.size());
    const Geometry g(net.input_rows(), net.input_cols());
    const int nthreads = std::max(1, std::min(par::threads(), n));

    std::vector<double> losses(n, 0.0);
    std::vector<double> p1(n, 0.0);
    // One gradient buffer per sample, reduced serially in sample order, so
    // the result is bit-identical for any thread count.
    std::vector<std::vector<T>> grads;
    if (grad) grads.assign(n, std::vector<T>(net.param_count(), T(0)));

#pragma omp parallel num_threads(nthreads)
    {
        Workspace<T> ws(g);
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            prepare_input(*batch[i], g, ws.input.data());
            forward_pass(net.params(), g, ws);
            const auto probs =
                softmax2(static_cast<double>(ws.logits[0]), static_cast<double>(ws.logits[1]));
            losses[i] = bce_one(probs[1], labels[i]);
            p1[i] = probs[1];
            if (grad) {
                const double y = labels[i];
                const std::array<T, 2> dlogits = {static_cast<T>((probs[0] - (1.0 - y)) / n),
                                                  static_cast<T>((probs[1] - y) / n)};
                backward_pass(net.params(), g, ws, dlogits, grads[i]);
            }
        }
    }
    if (grad) {
        grad->assign(net.param_count(), T(0));
        for (int i = 0; i < n; ++i)
            for (std::size_t j = 0; j < grad->size(); ++j) (*grad)[j] += grads[i][j];
    }
    if (probs_out) *probs_out = p1;
    double loss = 0.0;
    for (double l : losses) loss += l;
    return loss / n;
}

template <class T>
double batch_loss_and_grad(const ConvNet<T>& net, const std::vector<const BScan*>& batch,
                           const std::vector<int>& labels, std::vector<T>* grad) {
    return batch_loss_and_grad(net, batch, labels, grad, nullptr);
}

template <class T>
TrainResult train(ConvNet<T>& net, const std::vector<BScan>& images,
                  const std::vector<int>& labels, const TrainConfig& cfg) {
    if (images.empty() || images.size() != labels.size())
        throw std::invalid_argument("train: images/labels size mismatch");
    if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("train: learning rate must be >= 0");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    bool has0 = false, has1 = false;
    for (int l : labels) {
        if (l == 0) has0 = true;
        else if (l == 1) has1 = true;
        else throw std::invalid_argument("train: labels must be 0 or 1");
    }
    if (!has0 || !has1) throw std::invalid_argument("train: corpus must contain both classes");

    const auto t_start = std::chrono::steady_clock::now();
    const int n = static_cast<int>(images.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::mix(cfg.seed, 0x5EED));
    std::vector<T> grad;
    std::vector<double> probs;
    TrainResult result;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        // Fisher-Yates with our own generator keeps the order reproducible
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
        double epoch_loss = 0.0;
        int correct = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n - start);
            std::vector<const BScan*> batch(bs);
            std::vector<int> blab(bs);
            for (int i = 0; i < bs; ++i) {
                batch[i] = &images[order[start + i]];
                blab[i] = labels[order[start + i]];
            }
            const double loss = batch_loss_and_grad(net, batch, blab, &grad, &probs);
            epoch_loss += loss * bs;
            for (int i = 0; i < bs; ++i)
                if ((probs[i] >= 0.5 ? 1 : 0) == blab[i]) ++correct;
            for (std::size_t j = 0; j < grad.size(); ++j)
                net.params()[j] -= static_cast<T>(cfg.learning_rate) * grad[j];
        }
        EpochStats st;
        st.loss = epoch_loss / n;
        st.accuracy = static_cast<double>(correct) / n;
        result.curve.push_back(st);
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

template <class T>
TrainResult pretrain_generic(ConvNet<T>& net, const std::vector<BScan>& images,
                             const std::vector<int>& labels, const TrainConfig& cfg) {
    return train(net, images, labels, cfg);
}

template <class T>
std::vector<FeatureVector> extract(const ConvNet<T>& net, const std::vector<BScan>& windows) {
    const Geometry g(net.input_rows(), net.input_cols());
    const int n = static_cast<int>(windows.size());
    std::vector<FeatureVector> out(n);
    const int nthreads = std::max(1, std::min(par::threads(), n));
#pragma omp parallel num_threads(nthreads)
    {
        Workspace<T> ws(g);
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            prepare_input(windows[i], g, ws.input.data());
            forward_pass(net.params(), g, ws);
            out[i].values.assign(ws.embed.begin(), ws.embed.end());
        }
    }
    return out;
}

// ---- checkpoint ----------------------------------------------------------------

namespace {
constexpr char kNetMagic[4] = {'F', 'N', 'E', 'T'};
}

void save_checkpoint(const ConvNet<float>& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    out.write(kNetMagic, 4);
    put32(1); // version
    put32(static_cast<std::uint32_t>(net.input_rows()));
    put32(static_cast<std::uint32_t>(net.input_cols()));
    put32(ConvNet<float>::kEmbedDim);
    const auto sizes = ConvNet<float>::blob_sizes();
    put32(static_cast<std::uint32_t>(sizes.size()));
    for (std::size_t s : sizes) put32(static_cast<std::uint32_t>(s));
    out.write(reinterpret_cast<const char*>(net.params().data()),
              static_cast<std::streamsize>(net.params().size() * sizeof(float)));
    if (!out) throw std::runtime_error("short write to checkpoint '" + path + "'");
}

ConvNet<float> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint '" + path + "'", 0);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kNetMagic, 4) != 0)
        throw FormatError("bad FNET magic", 0);
    auto get32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw FormatError("truncated FNET header", static_cast<std::size_t>(in.tellg()));
        return v;
    };
    const std::uint32_t version = get32();
    if (version != 1) throw FormatError("unsupported FNET version " + std::to_string(version), 4);
    const int rows = static_cast<int>(get32());
    const int cols = static_cast<int>(get32());
    const std::uint32_t embed = get32();
    if (embed != ConvNet<float>::kEmbedDim) throw FormatError("unexpected embedding dim", 12);
    const std::uint32_t nblobs = get32();
    const auto sizes = ConvNet<float>::blob_sizes();
    if (nblobs != sizes.size()) throw FormatError("unexpected layer manifest length", 16);
    for (std::size_t i = 0; i < sizes.size(); ++i)
        if (get32() != sizes[i]) throw FormatError("layer manifest mismatch at blob " + std::to_string(i), 20 + 4 * i);
    ConvNet<float> net(rows, cols);
    in.read(reinterpret_cast<char*>(net.params().data()),
            static_cast<std::streamsize>(net.params().size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != net.params().size() * sizeof(float))
        throw FormatError("truncated FNET parameter blob", static_cast<std::size_t>(in.tellg()));
    for (float v : net.params())
        if (!std::isfinite(v)) throw FormatError("non-finite parameter in checkpoint", 0);
    return net;
}

void write_loss_curve_csv(const TrainResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write loss curve '" + path + "'");
    out << "epoch,loss,accuracy\n";
    for (std::size_t i = 0; i < result.curve.size(); ++i)
        out << i + 1 << "," << result.curve[i].loss << "," << result.curve[i].accuracy << "\n";
}

// explicit instantiations: float for production, double for numeric tests
template class ConvNet<float>;
template class ConvNet<double>;
template ForwardResult forward(const ConvNet<float>&, const BScan&);
template ForwardResult forward(const ConvNet<double>&, const BScan&);
template double batch_loss_and_grad(const ConvNet<float>&, const std::vector<const BScan*>&,
                                    const std::vector<int>&, std::vector<float>*);
template double batch_loss_and_grad(const ConvNet<double>&, const std::vector<const BScan*>&,
                                    const std::vector<int>&, std::vector<double>*);
template double batch_loss_and_grad(const ConvNet<float>&, const std::vector<const BScan*>&,
                                    const std::vector<int>&, std::vector<float>*,
                                    std::vector<double>*);
template double batch_loss_and_grad(const ConvNet<double>&, const std::vector<const BScan*>&,
                                    const std::vector<int>&, std::vector<double>*,
                                    std::vector<double>*);
template TrainResult train(ConvNet<float>&, const std::vector<BScan>&, const std::vector<int>&,
                           const TrainConfig&);
template TrainResult train(ConvNet<double>&, const std::vector<BScan>&, const std::vector<int>&,
                           const TrainConfig&);
template TrainResult pretrain_generic(ConvNet<float>&, const std::vector<BScan>&,
                                      const std::vector<int>&, const TrainConfig&);
template TrainResult pretrain_generic(ConvNet<double>&, const std::vector<BScan>&,
                                      const std::vector<int>&, const TrainConfig&);
template std::vector<FeatureVector> extract(const ConvNet<float>&, const std::vector<BScan>&);
template std::vector<FeatureVector> extract(const ConvNet<double>&, const std::vector<BScan>&);

}  // namespace gpr
