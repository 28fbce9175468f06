#pragma once

#include <cstddef>
#include <string>

// Dense double-precision primitives backing the matrix and graph code.
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2/FMA, a vectorized variant. The active variant is chosen once at
// startup from CPUID and can be overridden with the MEAGRAPH_ISA
// environment variable ("scalar" or "avx2") or force_isa() in tests.
// Scalar and SIMD variants are equivalence-tested against each other;
// reductions may differ in the last few ulps due to reassociation.
namespace meagraph::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
std::string isa_name(Isa isa);

// Test hook. Throws ConfigError if the requested ISA is unsupported here.
void force_isa(Isa isa);

bool cpu_has_avx2();

// c = a (m x k) * b (k x n), all row-major, c overwritten.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

double dot(const double* x, const double* y, std::size_t n);

// Squared Euclidean distance between two length-n vectors.
double sqdist(const double* x, const double* y, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// z = x + y / z = x - y
void add(const double* x, const double* y, double* z, std::size_t n);
void sub(const double* x, const double* y, double* z, std::size_t n);

// z = alpha * x
void scale(double alpha, const double* x, double* z, std::size_t n);

double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);

} // namespace meagraph::kernels
