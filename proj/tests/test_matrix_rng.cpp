#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "meagraph/errors.hpp"
#include "meagraph/matrix.hpp"
#include "meagraph/rng.hpp"

using namespace meagraph;

TEST_CASE("matrix shape invariant") {
    CHECK_THROWS_AS(Matrix(2, 3, {1.0, 2.0}), ShapeError);
    const Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 6);
}

TEST_CASE("matrix transpose and ragged rows") {
    const Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
    const Matrix t = m.transposed();
    CHECK(t.rows() == 3);
    CHECK(t(2, 1) == 6);
    CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}), ShapeError);
}

TEST_CASE("assert_finite flags NaN and Inf") {
    Matrix m(1, 2, {1.0, 2.0});
    CHECK_NOTHROW(m.assert_finite("test"));
    m(0, 1) = std::nan("");
    CHECK_FALSE(m.all_finite());
    CHECK_THROWS_AS(m.assert_finite("test"), NumericError);
}

TEST_CASE("rng streams are reproducible per seed") {
    Rng a(123), b(123), c(124);
    bool all_equal = true;
    bool any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform01 stays in [0,1) and normal is roughly standard") {
    Rng rng(5);
    double sum = 0.0, sumsq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("sample_without_replacement yields k distinct sorted values") {
    Rng rng(9);
    const auto s = rng.sample_without_replacement(50, 20);
    CHECK(s.size() == 20);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 20);
    for (std::size_t v : s) CHECK(v < 50);
    CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), ConfigError);
}

TEST_CASE("derive_seed separates tags and coordinates") {
    const auto a = derive_seed(1, "alpha", 0, 0, 0);
    CHECK(a == derive_seed(1, "alpha", 0, 0, 0));
    CHECK(a != derive_seed(1, "beta", 0, 0, 0));
    CHECK(a != derive_seed(1, "alpha", 1, 0, 0));
    CHECK(a != derive_seed(1, "alpha", 0, 1, 0));
    CHECK(a != derive_seed(2, "alpha", 0, 0, 0));
}
