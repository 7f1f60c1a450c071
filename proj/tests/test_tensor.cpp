#include <doctest.h>

#include "error.hpp"
#include "tensor.hpp"

using namespace sdc;

TEST_CASE("construction and element access") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(1) == 3);
    for (float v : t.data) CHECK(v == 0.0f);

    Tensor u({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    CHECK(u.at({0, 0}) == 1.0f);
    CHECK(u.at({0, 1}) == 2.0f);
    CHECK(u.at({1, 0}) == 3.0f);
    CHECK(u.at({1, 1}) == 4.0f);
    u.at({1, 1}) = 9.0f;
    CHECK(u.data[3] == 9.0f);
}

TEST_CASE("row-major flat layout") {
    Tensor t({2, 3, 4});
    CHECK(t.flat({0, 0, 0}) == 0);
    CHECK(t.flat({0, 0, 3}) == 3);
    CHECK(t.flat({0, 1, 0}) == 4);
    CHECK(t.flat({1, 0, 0}) == 12);
    CHECK(t.flat({1, 2, 3}) == 23);
}

TEST_CASE("shape validation") {
    CHECK_THROWS_AS(Tensor({2, 0}), Error);
    CHECK_THROWS_AS(Tensor({-1}), Error);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1.0f, 2.0f}), Error);
    Tensor t({2, 3});
    CHECK_THROWS_AS(t.flat({1}), Error);
    CHECK_THROWS_AS(t.flat({2, 0}), Error);
    CHECK_THROWS_AS(t.flat({0, 3}), Error);
}

TEST_CASE("reshape preserves data, rejects bad sizes") {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    Tensor r = t.reshaped({3, 2});
    CHECK(r.dim(0) == 3);
    CHECK(r.data == t.data);
    CHECK_THROWS_AS(t.reshaped({4, 2}), Error);
}

TEST_CASE("same_shape and all_finite") {
    Tensor a({2, 2});
    Tensor b({2, 2});
    Tensor c({4});
    CHECK(a.same_shape(b));
    CHECK_FALSE(a.same_shape(c));
    CHECK(a.all_finite());
    a.data[1] = std::numeric_limits<float>::infinity();
    CHECK_FALSE(a.all_finite());
    a.data[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(a.all_finite());
}

TEST_CASE("tensor_cast converts between scalar types") {
    Tensor a({3}, {1.5f, -2.0f, 0.25f});
    TensorD d = tensor_cast<double>(a);
    CHECK(d.at({1}) == -2.0);
    Tensor back = tensor_cast<float>(d);
    CHECK(back.data == a.data);
}

TEST_CASE("shape_str formats dimensions") {
    CHECK(shape_str({2, 3, 4}) == "[2x3x4]");
    CHECK(shape_str({}) == "[]");
}
