#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tensor.hpp"

namespace sdc {

// All kernels accumulate in a fixed loop order so repeated calls on identical
// inputs are bit-identical.

// C[m,n] = A[m,k] * B[k,n]
template <class S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw_dimension("matmul expects rank-2 tensors, got " + shape_str(a.shape) + " and " + shape_str(b.shape));
    if (a.dim(1) != b.dim(0))
        throw_dimension("matmul inner dimensions disagree: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    TensorT<S> c({m, n});
    const S* pa = a.ptr();
    const S* pb = b.ptr();
    S* pc = c.ptr();
    for (int i = 0; i < m; ++i) {
        const S* arow = pa + static_cast<std::size_t>(i) * k;
        S* crow = pc + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const S av = arow[kk];
            const S* brow = pb + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C[m,n] = A^T * B with A[k,m], B[k,n]
template <class S>
TensorT<S> matmul_at_b(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
        throw_dimension("matmul_at_b shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const int k = a.dim(0), m = a.dim(1), n = b.dim(1);
    TensorT<S> c({m, n});
    const S* pa = a.ptr();
    const S* pb = b.ptr();
    S* pc = c.ptr();
    for (int kk = 0; kk < k; ++kk) {
        const S* arow = pa + static_cast<std::size_t>(kk) * m;
        const S* brow = pb + static_cast<std::size_t>(kk) * n;
        for (int i = 0; i < m; ++i) {
            const S av = arow[i];
            S* crow = pc + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C[m,n] = A * B^T with A[m,k], B[n,k]
template <class S>
TensorT<S> matmul_a_bt(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw_dimension("matmul_a_bt shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    TensorT<S> c({m, n});
    const S* pa = a.ptr();
    const S* pb = b.ptr();
    S* pc = c.ptr();
    for (int i = 0; i < m; ++i) {
        const S* arow = pa + static_cast<std::size_t>(i) * k;
        S* crow = pc + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const S* brow = pb + static_cast<std::size_t>(j) * k;
            S acc = S(0);
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] = acc;
        }
    }
    return c;
}

struct ConvGeom {
    int batch, c_in, h, w;
    int c_out, kh, kw, stride, pad;
    int oh, ow;
};

template <class S>
ConvGeom conv_geometry(const TensorT<S>& input, const TensorT<S>& kernels, int stride, int pad) {
    if (input.rank() != 4) throw_dimension("conv2d input must be [batch,c,h,w], got " + shape_str(input.shape));
    if (kernels.rank() != 4)
        throw_dimension("conv2d kernels must be [c_out,c_in,kh,kw], got " + shape_str(kernels.shape));
    if (stride <= 0) throw_dimension("conv2d stride must be positive");
    if (pad < 0) throw_dimension("conv2d pad must be non-negative");
    ConvGeom g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
               kernels.dim(0), kernels.dim(2), kernels.dim(3), stride, pad, 0, 0};
    if (kernels.dim(1) != g.c_in)
        throw_dimension("conv2d channel mismatch: input has " + std::to_string(g.c_in) + ", kernels expect " +
                        std::to_string(kernels.dim(1)));
    const int num_h = g.h + 2 * pad - g.kh;
    const int num_w = g.w + 2 * pad - g.kw;
    if (num_h < 0 || num_w < 0 || num_h % stride != 0 || num_w % stride != 0)
        throw_dimension("conv2d output size is not a positive integer for input " + shape_str(input.shape) +
                        ", kernel " + shape_str(kernels.shape) + ", stride " + std::to_string(stride) + ", pad " +
                        std::to_string(pad));
    g.oh = num_h / stride + 1;
    g.ow = num_w / stride + 1;
    return g;
}

// Patch matrix [batch*oh*ow, c_in*kh*kw]; out-of-bounds positions are zero.
template <class S>
TensorT<S> im2col(const TensorT<S>& input, const ConvGeom& g) {
    const int patch = g.c_in * g.kh * g.kw;
    TensorT<S> cols({g.batch * g.oh * g.ow, patch});
    const S* src = input.ptr();
    S* dst = cols.ptr();
    const std::size_t img_stride = static_cast<std::size_t>(g.c_in) * g.h * g.w;
    for (int b = 0; b < g.batch; ++b) {
        const S* img = src + b * img_stride;
        for (int oy = 0; oy < g.oh; ++oy) {
            for (int ox = 0; ox < g.ow; ++ox) {
                S* row = dst + (static_cast<std::size_t>(b) * g.oh * g.ow + static_cast<std::size_t>(oy) * g.ow + ox) * patch;
                const int iy0 = oy * g.stride - g.pad;
                const int ix0 = ox * g.stride - g.pad;
                std::size_t p = 0;
                for (int c = 0; c < g.c_in; ++c) {
                    const S* plane = img + static_cast<std::size_t>(c) * g.h * g.w;
                    for (int ky = 0; ky < g.kh; ++ky) {
                        const int iy = iy0 + ky;
                        for (int kx = 0; kx < g.kw; ++kx, ++p) {
                            const int ix = ix0 + kx;
                            row[p] = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
                                         ? plane[static_cast<std::size_t>(iy) * g.w + ix]
                                         : S(0);
                        }
                    }
                }
            }
        }
    }
    return cols;
}

// Scatter-add inverse of im2col; accumulation order is the im2col scan order.
template <class S>
TensorT<S> col2im(const TensorT<S>& cols, const ConvGeom& g) {
    TensorT<S> out({g.batch, g.c_in, g.h, g.w});
    const int patch = g.c_in * g.kh * g.kw;
    const S* src = cols.ptr();
    S* dst = out.ptr();
    const std::size_t img_stride = static_cast<std::size_t>(g.c_in) * g.h * g.w;
    for (int b = 0; b < g.batch; ++b) {
        S* img = dst + b * img_stride;
        for (int oy = 0; oy < g.oh; ++oy) {
            for (int ox = 0; ox < g.ow; ++ox) {
                const S* row = src + (static_cast<std::size_t>(b) * g.oh * g.ow + static_cast<std::size_t>(oy) * g.ow + ox) * patch;
                const int iy0 = oy * g.stride - g.pad;
                const int ix0 = ox * g.stride - g.pad;
                std::size_t p = 0;
                for (int c = 0; c < g.c_in; ++c) {
                    S* plane = img + static_cast<std::size_t>(c) * g.h * g.w;
                    for (int ky = 0; ky < g.kh; ++ky) {
                        const int iy = iy0 + ky;
                        for (int kx = 0; kx < g.kw; ++kx, ++p) {
                            const int ix = ix0 + kx;
                            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
                                plane[static_cast<std::size_t>(iy) * g.w + ix] += row[p];
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Kernel [c_out,c_in,kh,kw] -> matmul operand [c_in*kh*kw, c_out].
template <class S>
TensorT<S> kernel_as_cols(const TensorT<S>& kernels) {
    const int c_out = kernels.dim(0);
    const int patch = kernels.dim(1) * kernels.dim(2) * kernels.dim(3);
    TensorT<S> w({patch, c_out});
    const S* src = kernels.ptr();
    S* dst = w.ptr();
    for (int co = 0; co < c_out; ++co)
        for (int p = 0; p < patch; ++p)
            dst[static_cast<std::size_t>(p) * c_out + co] = src[static_cast<std::size_t>(co) * patch + p];
    return w;
}

template <class S>
TensorT<S> cols_as_kernel(const TensorT<S>& w, int c_out, int c_in, int kh, int kw) {
    const int patch = c_in * kh * kw;
    TensorT<S> kernels({c_out, c_in, kh, kw});
    const S* src = w.ptr();
    S* dst = kernels.ptr();
    for (int co = 0; co < c_out; ++co)
        for (int p = 0; p < patch; ++p)
            dst[static_cast<std::size_t>(co) * patch + p] = src[static_cast<std::size_t>(p) * c_out + co];
    return kernels;
}

// [batch*oh*ow, c_out] rows -> [batch, c_out, oh, ow]
template <class S>
TensorT<S> rows_to_chw(const TensorT<S>& rows, int batch, int c_out, int oh, int ow) {
    TensorT<S> out({batch, c_out, oh, ow});
    const S* src = rows.ptr();
    S* dst = out.ptr();
    const std::size_t hw = static_cast<std::size_t>(oh) * ow;
    for (int b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < hw; ++i)
            for (int c = 0; c < c_out; ++c)
                dst[(static_cast<std::size_t>(b) * c_out + c) * hw + i] = src[(static_cast<std::size_t>(b) * hw + i) * c_out + c];
    return out;
}

template <class S>
TensorT<S> chw_to_rows(const TensorT<S>& t) {
    const int batch = t.dim(0), c = t.dim(1);
    const std::size_t hw = static_cast<std::size_t>(t.dim(2)) * t.dim(3);
    TensorT<S> rows({batch * t.dim(2) * t.dim(3), c});
    const S* src = t.ptr();
    S* dst = rows.ptr();
    for (int b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < hw; ++i)
            for (int cc = 0; cc < c; ++cc)
                dst[(static_cast<std::size_t>(b) * hw + i) * c + cc] = src[(static_cast<std::size_t>(b) * c + cc) * hw + i];
    return rows;
}

// Cross-correlation (no kernel flip), zero padding.
template <class S>
TensorT<S> conv2d(const TensorT<S>& input, const TensorT<S>& kernels, int stride, int pad) {
    const ConvGeom g = conv_geometry(input, kernels, stride, pad);
    TensorT<S> cols = im2col(input, g);
    TensorT<S> w = kernel_as_cols(kernels);
    TensorT<S> rows = matmul(cols, w);
    return rows_to_chw(rows, g.batch, g.c_out, g.oh, g.ow);
}

template <class S>
TensorT<S> relu(const TensorT<S>& x) {
    TensorT<S> y = x;
    for (S& v : y.data) v = v > S(0) ? v : S(0);
    return y;
}

template <class S>
TensorT<S> relu_backward(const TensorT<S>& x, const TensorT<S>& dy) {
    TensorT<S> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (!(x.data[i] > S(0))) dx.data[i] = S(0);
    return dx;
}

// 2x2 max pooling, stride 2; trailing odd rows/columns are dropped.
// argmax (flat input index per output element) is recorded when given.
template <class S>
TensorT<S> maxpool2(const TensorT<S>& x, std::vector<int>* argmax = nullptr) {
    if (x.rank() != 4) throw_dimension("maxpool2 input must be [batch,c,h,w], got " + shape_str(x.shape));
    const int batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h / 2, ow = w / 2;
    if (oh == 0 || ow == 0) throw_dimension("maxpool2 input smaller than window: " + shape_str(x.shape));
    TensorT<S> y({batch, c, oh, ow});
    if (argmax) argmax->assign(y.size(), 0);
    const S* src = x.ptr();
    S* dst = y.ptr();
    std::size_t o = 0;
    for (int b = 0; b < batch; ++b) {
        for (int cc = 0; cc < c; ++cc) {
            const S* plane = src + (static_cast<std::size_t>(b) * c + cc) * h * w;
            const std::size_t plane_off = (static_cast<std::size_t>(b) * c + cc) * h * w;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++o) {
                    int best = (2 * oy) * w + 2 * ox;
                    S bv = plane[best];
                    const int cand[3] = {(2 * oy) * w + 2 * ox + 1, (2 * oy + 1) * w + 2 * ox,
                                         (2 * oy + 1) * w + 2 * ox + 1};
                    for (int idx : cand) {
                        if (plane[idx] > bv) {  // ties keep the first in scan order
                            bv = plane[idx];
                            best = idx;
                        }
                    }
                    dst[o] = bv;
                    if (argmax) (*argmax)[o] = static_cast<int>(plane_off) + best;
                }
            }
        }
    }
    return y;
}

template <class S>
TensorT<S> maxpool2_backward(const TensorT<S>& dy, const std::vector<int>& argmax, const std::vector<int>& input_shape) {
    TensorT<S> dx(input_shape);
    for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[static_cast<std::size_t>(argmax[i])] += dy.data[i];
    return dx;
}

// Row-wise stable softmax over the last dimension of a [n, c] tensor.
template <class S>
TensorT<S> softmax_rows(const TensorT<S>& logits) {
    if (logits.rank() != 2) throw_dimension("softmax expects [n, classes], got " + shape_str(logits.shape));
    const int n = logits.dim(0), c = logits.dim(1);
    TensorT<S> out({n, c});
    for (int i = 0; i < n; ++i) {
        const S* row = logits.ptr() + static_cast<std::size_t>(i) * c;
        S* orow = out.ptr() + static_cast<std::size_t>(i) * c;
        S mx = row[0];
        for (int j = 0; j < c; ++j) {
            if (std::isnan(static_cast<double>(row[j]))) throw_numeric("softmax input contains NaN");
            mx = std::max(mx, row[j]);
        }
        S sum = S(0);
        for (int j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (int j = 0; j < c; ++j) orow[j] /= sum;
    }
    return out;
}

template <class S>
TensorT<S> softmax(const TensorT<S>& logits) {
    if (logits.rank() == 1) {
        TensorT<S> rows = softmax_rows(logits.reshaped({1, logits.dim(0)}));
        return rows.reshaped({logits.dim(0)});
    }
    return softmax_rows(logits);
}

// dz_j = p_j * (dp_j - sum_k dp_k * p_k), row-wise.
template <class S>
TensorT<S> softmax_backward(const TensorT<S>& probs, const TensorT<S>& dprobs) {
    const int n = probs.dim(0), c = probs.dim(1);
    TensorT<S> dz({n, c});
    for (int i = 0; i < n; ++i) {
        const S* p = probs.ptr() + static_cast<std::size_t>(i) * c;
        const S* dp = dprobs.ptr() + static_cast<std::size_t>(i) * c;
        S* out = dz.ptr() + static_cast<std::size_t>(i) * c;
        S dot = S(0);
        for (int j = 0; j < c; ++j) dot += dp[j] * p[j];
        for (int j = 0; j < c; ++j) out[j] = p[j] * (dp[j] - dot);
    }
    return dz;
}

}  // namespace sdc
