#include <doctest.h>

#include <cmath>
#include <vector>

#include "error.hpp"
#include "kernels.hpp"
#include "rng.hpp"
#include "testutil.hpp"

using namespace sdc;
using sdctest::pick;

namespace {

// Quadruple-loop reference convolution, written independently of the im2col
// path so the two implementations check each other.
Tensor conv_reference(const Tensor& x, const Tensor& k, int stride, int pad) {
    const int batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (w + 2 * pad - kw) / stride + 1;
    Tensor y({batch, cout, oh, ow});
    for (int b = 0; b < batch; ++b)
        for (int co = 0; co < cout; ++co)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int dy = 0; dy < kh; ++dy)
                            for (int dx = 0; dx < kw; ++dx) {
                                const int sy = oy * stride + dy - pad;
                                const int sx = ox * stride + dx - pad;
                                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                                acc += static_cast<double>(x.at({b, ci, sy, sx})) *
                                       static_cast<double>(k.at({co, ci, dy, dx}));
                            }
                    y.at({b, co, oy, ox}) = static_cast<float>(acc);
                }
    return y;
}

}  // namespace

TEST_CASE("matmul hand oracle") {
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor b({2, 2}, {5, 6, 7, 8});
    Tensor c = matmul(a, b);
    CHECK(c.at({0, 0}) == 19.0f);
    CHECK(c.at({0, 1}) == 22.0f);
    CHECK(c.at({1, 0}) == 43.0f);
    CHECK(c.at({1, 1}) == 50.0f);

    Tensor row({1, 3}, {1, 2, 3});
    Tensor col({3, 1}, {4, 5, 6});
    CHECK(matmul(row, col).at({0, 0}) == 32.0f);
    CHECK_THROWS_AS(matmul(a, row), Error);
}

TEST_CASE("transposed matmul variants agree with explicit transposes") {
    RngStream rng(101, 0, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = pick(rng, 1, 5), k = pick(rng, 1, 5), n = pick(rng, 1, 5);
        Tensor a({k, m});
        Tensor b({k, n});
        for (float& v : a.data) v = static_cast<float>(rng.next_normal());
        for (float& v : b.data) v = static_cast<float>(rng.next_normal());

        Tensor at({m, k});
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < m; ++j) at.at({j, i}) = a.at({i, j});

        Tensor direct = matmul(at, b);
        Tensor fused = matmul_at_b(a, b);
        REQUIRE(fused.same_shape(direct));
        for (std::size_t i = 0; i < direct.size(); ++i)
            CHECK(fused.at(i) == doctest::Approx(direct.at(i)).epsilon(1e-5));

        Tensor bt({n, k});
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) bt.at({j, i}) = b.at({i, j});
        Tensor fused2 = matmul_a_bt(at, bt);  // (m,k) x (n,k)^T = (m,n)
        REQUIRE(fused2.same_shape(direct));
        for (std::size_t i = 0; i < direct.size(); ++i)
            CHECK(fused2.at(i) == doctest::Approx(direct.at(i)).epsilon(1e-5));
    }
}

TEST_CASE("conv2d hand oracle 3x3 input, 2x2 kernel") {
    Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor k({1, 1, 2, 2}, {1, 0, 0, 1});
    Tensor y = conv2d(x, k, 1, 0);
    REQUIRE(y.shape == std::vector<int>{1, 1, 2, 2});
    CHECK(y.at({0, 0, 0, 0}) == 6.0f);
    CHECK(y.at({0, 0, 0, 1}) == 8.0f);
    CHECK(y.at({0, 0, 1, 0}) == 12.0f);
    CHECK(y.at({0, 0, 1, 1}) == 14.0f);
}

TEST_CASE("conv2d matches reference over random shapes, strides, padding") {
    RngStream rng(202, 0, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const int batch = pick(rng, 1, 3), cin = pick(rng, 1, 3), cout = pick(rng, 1, 4);
        const int kh = pick(rng, 1, 3), kw = pick(rng, 1, 3);
        const int stride = pick(rng, 1, 2), pad = pick(rng, 0, 1);
        int h = pick(rng, kh, 7), w = pick(rng, kw, 7);
        // keep the geometry exact for the chosen stride
        h = ((h + 2 * pad - kh) / stride) * stride + kh - 2 * pad;
        w = ((w + 2 * pad - kw) / stride) * stride + kw - 2 * pad;
        if (h < 1 || w < 1) continue;
        Tensor x({batch, cin, h, w});
        Tensor k({cout, cin, kh, kw});
        for (float& v : x.data) v = static_cast<float>(rng.next_normal());
        for (float& v : k.data) v = static_cast<float>(rng.next_normal());
        Tensor got = conv2d(x, k, stride, pad);
        Tensor want = conv_reference(x, k, stride, pad);
        REQUIRE(got.same_shape(want));
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got.at(i) == doctest::Approx(want.at(i)).epsilon(1e-4));
    }
}

TEST_CASE("conv geometry rejects non-exact stride fits") {
    Tensor x({1, 1, 5, 5});
    Tensor k({1, 1, 2, 2});
    CHECK_THROWS_AS(conv_geometry(x, k, 2, 0), Error);  // (5-2) % 2 != 0
    CHECK_NOTHROW(conv_geometry(x, k, 1, 0));
    CHECK_THROWS_AS(conv_geometry(x, Tensor({1, 2, 2, 2}), 1, 0), Error);  // channel mismatch
}

TEST_CASE("im2col and col2im are adjoint") {
    RngStream rng(303, 0, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const int batch = pick(rng, 1, 2), cin = pick(rng, 1, 3);
        const int h = pick(rng, 3, 6), w = pick(rng, 3, 6);
        const int kh = pick(rng, 1, 3), kw = pick(rng, 1, 3);
        Tensor x({batch, cin, h, w});
        Tensor kdummy({1, cin, kh, kw});
        for (float& v : x.data) v = static_cast<float>(rng.next_normal());
        const ConvGeom g = conv_geometry(x, kdummy, 1, 1);
        Tensor cols = im2col(x, g);
        Tensor c(cols.shape);
        for (float& v : c.data) v = static_cast<float>(rng.next_normal());
        Tensor back = col2im(c, g);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < cols.size(); ++i)
            lhs += static_cast<double>(cols.at(i)) * static_cast<double>(c.at(i));
        for (std::size_t i = 0; i < x.size(); ++i)
            rhs += static_cast<double>(x.at(i)) * static_cast<double>(back.at(i));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
    }
}

TEST_CASE("kernel layout round trips") {
    Tensor k({3, 2, 2, 2});
    for (std::size_t i = 0; i < k.size(); ++i) k.at(i) = static_cast<float>(i);
    Tensor cols = kernel_as_cols(k);
    Tensor back = cols_as_kernel(cols, 3, 2, 2, 2);
    CHECK(back.shape == k.shape);
    CHECK(back.data == k.data);
}

TEST_CASE("chw row layout round trips") {
    Tensor t({2, 3, 2, 2});
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = static_cast<float>(i);
    Tensor rows = chw_to_rows(t);
    Tensor back = rows_to_chw(rows, 2, 3, 2, 2);
    CHECK(back.shape == t.shape);
    CHECK(back.data == t.data);
}

TEST_CASE("relu clamps and its backward gates on the input") {
    Tensor x({1, 4}, {-1.0f, 0.0f, 0.5f, 2.0f});
    Tensor y = relu(x);
    CHECK(y.data == std::vector<float>{0.0f, 0.0f, 0.5f, 2.0f});
    Tensor dy({1, 4}, {1.0f, 1.0f, 1.0f, 1.0f});
    Tensor dx = relu_backward(x, dy);
    CHECK(dx.data == std::vector<float>{0.0f, 0.0f, 1.0f, 1.0f});
}

TEST_CASE("maxpool2 picks block maxima, first element on ties") {
    Tensor x({1, 1, 4, 4}, {1, 2, 5, 5,    //
                            3, 4, 5, 5,    //
                            9, 9, 0, -1,   //
                            9, 9, -2, 7});
    std::vector<int> argmax;
    Tensor y = maxpool2(x, &argmax);
    REQUIRE(y.shape == std::vector<int>{1, 1, 2, 2});
    CHECK(y.at({0, 0, 0, 0}) == 4.0f);
    CHECK(y.at({0, 0, 0, 1}) == 5.0f);
    CHECK(y.at({0, 0, 1, 0}) == 9.0f);
    CHECK(y.at({0, 0, 1, 1}) == 7.0f);
    CHECK(argmax[0] == 5);   // the 4 at (1,1)
    CHECK(argmax[1] == 2);   // tie block: first in scan order
    CHECK(argmax[2] == 8);   // tie block of 9s: first in scan order
    CHECK(argmax[3] == 15);  // the 7

    Tensor dy({1, 1, 2, 2}, {1, 1, 1, 1});
    Tensor dx = maxpool2_backward(dy, argmax, x.shape);
    CHECK(dx.at(5) == 1.0f);
    CHECK(dx.at(2) == 1.0f);
    CHECK(dx.at(8) == 1.0f);
    CHECK(dx.at(15) == 1.0f);
    double total = 0.0;
    for (float v : dx.data) total += v;
    CHECK(total == 4.0);
}

TEST_CASE("maxpool2 drops trailing odd rows and columns") {
    Tensor x({1, 1, 5, 5});
    for (std::size_t i = 0; i < x.size(); ++i) x.at(i) = static_cast<float>(i);
    Tensor y = maxpool2(x);
    CHECK(y.shape == std::vector<int>{1, 1, 2, 2});
}

TEST_CASE("softmax hand values") {
    Tensor z({1, 2}, {0.0f, 0.0f});
    Tensor p = softmax_rows(z);
    CHECK(p.at({0, 0}) == doctest::Approx(0.5).epsilon(1e-12));

    Tensor z2({1, 2}, {0.0f, static_cast<float>(std::log(3.0))});
    Tensor p2 = softmax_rows(z2);
    CHECK(p2.at({0, 0}) == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(p2.at({0, 1}) == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("softmax is shift invariant and rows sum to one") {
    RngStream rng(404, 0, 0);
    Tensor z({5, 7});
    for (float& v : z.data) v = static_cast<float>(3.0 * rng.next_normal());
    Tensor shifted = z;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) shifted.at({i, j}) += 100.0f;
    Tensor p = softmax_rows(z);
    Tensor q = softmax_rows(shifted);
    for (int i = 0; i < 5; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 7; ++j) {
            sum += p.at({i, j});
            CHECK(p.at({i, j}) == doctest::Approx(q.at({i, j})).epsilon(1e-5));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("softmax_backward matches finite differences") {
    RngStream rng(505, 0, 0);
    TensorD z({2, 4});
    TensorD g({2, 4});
    for (double& v : z.data) v = rng.next_normal();
    for (double& v : g.data) v = rng.next_normal();
    TensorD p = softmax_rows(z);
    TensorD dz = softmax_backward(p, g);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 4; ++j) {
            TensorD zp = z, zm = z;
            zp.at({i, j}) += h;
            zm.at({i, j}) -= h;
            TensorD pp = softmax_rows(zp), pm = softmax_rows(zm);
            double num = 0.0;
            for (int k = 0; k < 4; ++k)
                num += g.at({i, k}) * (pp.at({i, k}) - pm.at({i, k})) / (2.0 * h);
            CHECK(dz.at({i, j}) == doctest::Approx(num).epsilon(1e-4));
        }
}
