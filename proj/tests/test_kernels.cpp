#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "meagraph/errors.hpp"
#include "meagraph/kernels.hpp"
#include "meagraph/matrix.hpp"
#include "meagraph/rng.hpp"
#include "support/oracles.hpp"

using namespace meagraph;

namespace {

// Runs fn under both dispatch tables and restores the ambient one.
template <typename Fn>
void with_each_isa(Fn&& fn) {
    const kernels::Isa ambient = kernels::active_isa();
    kernels::force_isa(kernels::Isa::scalar);
    fn(kernels::Isa::scalar);
    if (kernels::cpu_has_avx2()) {
        kernels::force_isa(kernels::Isa::avx2);
        fn(kernels::Isa::avx2);
    }
    kernels::force_isa(ambient);
}

} // namespace

TEST_CASE("matmul identity and projector cases") {
    with_each_isa([](kernels::Isa) {
        const Matrix i2 = Matrix::identity(2);
        const Matrix a(2, 2, {1, 2, 3, 4});
        CHECK(matmul(i2, a) == a);

        const Matrix proj(2, 2, {1, 0, 0, 0});
        const Matrix b(2, 2, {5, 6, 7, 8});
        const Matrix expected(2, 2, {5, 6, 0, 0});
        CHECK(matmul(proj, b) == expected);
    });
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Rng rng(42);
    with_each_isa([&rng](kernels::Isa) {
        const Matrix a = oracle::random_matrix(5, 4, rng);
        const Matrix b = oracle::random_matrix(4, 3, rng);
        CHECK(oracle::max_rel_diff(matmul(a, b), oracle::matmul(a, b)) < 1e-12);
    });
}

TEST_CASE("matmul dimension mismatch raises ShapeError") {
    const Matrix a(2, 3);
    const Matrix b(2, 3);
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("matmul associativity on random triples") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::random_matrix(4, 6, rng);
        const Matrix b = oracle::random_matrix(6, 3, rng);
        const Matrix c = oracle::random_matrix(3, 5, rng);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        CHECK(oracle::max_rel_diff(left, right) < 1e-10);
    }
}

TEST_CASE("scalar and simd variants agree on every kernel") {
    if (!kernels::cpu_has_avx2()) {
        return; // nothing to compare on this host
    }
    Rng rng(99);
    // Sizes straddling the 4-lane boundary, including tails.
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{4},
                          std::size_t{5}, std::size_t{7}, std::size_t{8}, std::size_t{9},
                          std::size_t{31}, std::size_t{64}, std::size_t{257}}) {
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();

        kernels::force_isa(kernels::Isa::scalar);
        const double dot_s = kernels::dot(x.data(), y.data(), n);
        const double sq_s = kernels::sqdist(x.data(), y.data(), n);
        const double sum_s = kernels::sum(x.data(), n);
        const double ss_s = kernels::sumsq(x.data(), n);
        std::vector<double> add_s(n), sub_s(n), scale_s(n), axpy_s = y;
        kernels::add(x.data(), y.data(), add_s.data(), n);
        kernels::sub(x.data(), y.data(), sub_s.data(), n);
        kernels::scale(1.7, x.data(), scale_s.data(), n);
        kernels::axpy(0.3, x.data(), axpy_s.data(), n);

        kernels::force_isa(kernels::Isa::avx2);
        const double dot_v = kernels::dot(x.data(), y.data(), n);
        const double sq_v = kernels::sqdist(x.data(), y.data(), n);
        const double sum_v = kernels::sum(x.data(), n);
        const double ss_v = kernels::sumsq(x.data(), n);
        std::vector<double> add_v(n), sub_v(n), scale_v(n), axpy_v = y;
        kernels::add(x.data(), y.data(), add_v.data(), n);
        kernels::sub(x.data(), y.data(), sub_v.data(), n);
        kernels::scale(1.7, x.data(), scale_v.data(), n);
        kernels::axpy(0.3, x.data(), axpy_v.data(), n);

        const double tol = 1e-12 * static_cast<double>(n);
        CHECK(std::abs(dot_s - dot_v) <= tol * (1.0 + std::abs(dot_s)));
        CHECK(std::abs(sq_s - sq_v) <= tol * (1.0 + sq_s));
        CHECK(std::abs(sum_s - sum_v) <= tol * (1.0 + std::abs(sum_s)));
        CHECK(std::abs(ss_s - ss_v) <= tol * (1.0 + ss_s));
        // Elementwise kernels reassociate nothing; lanes must agree except
        // for fused multiply-add rounding in axpy.
        CHECK(add_s == add_v);
        CHECK(sub_s == sub_v);
        CHECK(scale_s == scale_v);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(axpy_v[i] == doctest::Approx(axpy_s[i]).epsilon(1e-14));
        }
    }

    // Matmul across both lanes, shapes with non-multiple-of-4 widths.
    const std::vector<std::tuple<int, int, int>> shapes = {
        {3, 5, 7}, {8, 8, 8}, {1, 9, 2}, {6, 1, 5}};
    for (const auto& [m, k, n] : shapes) {
        const Matrix a = oracle::random_matrix(m, k, rng);
        const Matrix b = oracle::random_matrix(k, n, rng);
        kernels::force_isa(kernels::Isa::scalar);
        const Matrix c_s = matmul(a, b);
        kernels::force_isa(kernels::Isa::avx2);
        const Matrix c_v = matmul(a, b);
        CHECK(oracle::max_rel_diff(c_s, c_v) < 1e-13);
    }
    kernels::force_isa(kernels::cpu_has_avx2() ? kernels::Isa::avx2 : kernels::Isa::scalar);
}

TEST_CASE("isa dispatch is reported and forceable") {
    const kernels::Isa ambient = kernels::active_isa();
    kernels::force_isa(kernels::Isa::scalar);
    CHECK(kernels::active_isa() == kernels::Isa::scalar);
    CHECK(kernels::isa_name(kernels::active_isa()) == "scalar");
    kernels::force_isa(ambient);
    CHECK(kernels::active_isa() == ambient);
}
