#include "meagraph/kernels.hpp"

#include <cstdlib>

#include "meagraph/errors.hpp"

namespace meagraph::kernels {

namespace detail::scalar {
void matmul(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
double dot(const double*, const double*, std::size_t);
double sqdist(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void add(const double*, const double*, double*, std::size_t);
void sub(const double*, const double*, double*, std::size_t);
void scale(double, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
double sumsq(const double*, std::size_t);
} // namespace detail::scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace detail::avx2 {
void matmul(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
double dot(const double*, const double*, std::size_t);
double sqdist(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void add(const double*, const double*, double*, std::size_t);
void sub(const double*, const double*, double*, std::size_t);
void scale(double, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
double sumsq(const double*, std::size_t);
} // namespace detail::avx2
#endif

namespace {

struct Table {
    void (*matmul)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*add)(const double*, const double*, double*, std::size_t);
    void (*sub)(const double*, const double*, double*, std::size_t);
    void (*scale)(double, const double*, double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
};

constexpr Table kScalarTable = {
    detail::scalar::matmul, detail::scalar::dot,   detail::scalar::sqdist,
    detail::scalar::axpy,   detail::scalar::add,   detail::scalar::sub,
    detail::scalar::scale,  detail::scalar::sum,   detail::scalar::sumsq,
};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2Table = {
    detail::avx2::matmul, detail::avx2::dot,   detail::avx2::sqdist,
    detail::avx2::axpy,   detail::avx2::add,   detail::avx2::sub,
    detail::avx2::scale,  detail::avx2::sum,   detail::avx2::sumsq,
};
#endif

struct Dispatch {
    Isa isa = Isa::scalar;
    const Table* table = &kScalarTable;

    Dispatch() {
        Isa wanted = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
        if (const char* env = std::getenv("MEAGRAPH_ISA")) {
            const std::string s(env);
            if (s == "scalar") {
                wanted = Isa::scalar;
            } else if (s == "avx2" && cpu_has_avx2()) {
                wanted = Isa::avx2;
            }
        }
        set(wanted);
    }

    void set(Isa wanted) {
        isa = wanted;
#if defined(__x86_64__) || defined(_M_X64)
        table = (wanted == Isa::avx2) ? &kAvx2Table : &kScalarTable;
#else
        table = &kScalarTable;
#endif
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

} // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa active_isa() { return dispatch().isa; }

std::string isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) {
    if (isa == Isa::avx2 && !cpu_has_avx2()) {
        throw ConfigError("kernels: avx2 requested but not supported on this CPU");
    }
    dispatch().set(isa);
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    dispatch().table->matmul(a, b, c, m, k, n);
}

double dot(const double* x, const double* y, std::size_t n) {
    return dispatch().table->dot(x, y, n);
}

double sqdist(const double* x, const double* y, std::size_t n) {
    return dispatch().table->sqdist(x, y, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    dispatch().table->axpy(alpha, x, y, n);
}

void add(const double* x, const double* y, double* z, std::size_t n) {
    dispatch().table->add(x, y, z, n);
}

void sub(const double* x, const double* y, double* z, std::size_t n) {
    dispatch().table->sub(x, y, z, n);
}

void scale(double alpha, const double* x, double* z, std::size_t n) {
    dispatch().table->scale(alpha, x, z, n);
}

double sum(const double* x, std::size_t n) { return dispatch().table->sum(x, n); }

double sumsq(const double* x, std::size_t n) { return dispatch().table->sumsq(x, n); }

} // namespace meagraph::kernels
