#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

// Data-parallel inner loops. Every variant performs the same IEEE operations in the
// same order with no fused multiply-add, so results are bit-identical to the scalar
// reference; the equivalence tests assert exactly that.

namespace scarcity::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct KernelTable {
    Isa isa;

    /// out[i] = p[i]*x[i] + (1-p[i])*(1-x[i])
    void (*disposition_filter)(const double* p, const double* x, double* out, std::size_t n);

    /// out[k] = in[k]*(1-q) + in[k-1]*q for k in [0, n]; `in` has n entries, `out` n+1.
    void (*convolve_bernoulli)(const double* in, double q, double* out, std::size_t n);

    /// out[i] = (1-w)*a[i] + w*b[i]
    void (*blend)(const double* a, const double* b, double w, double* out, std::size_t n);

    /// actions[i] = u[i] < prob[i]; returns the number of ones.
    std::size_t (*threshold)(const double* u, const double* prob, std::uint8_t* actions, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_kernels();
#endif
#if defined(__aarch64__)
const KernelTable& neon_kernels();
#endif

/// Variants this binary was built with and the CPU supports, scalar first.
std::vector<const KernelTable*> available_kernels();

/// Best supported table. SCARCITY_SIMD=scalar|avx2|neon overrides when supported.
const KernelTable& active_kernels();

// Span conveniences over the active table.
void disposition_filter(std::span<const double> p, std::span<const double> x, std::span<double> out);
std::vector<double> convolve_bernoulli(std::span<const double> in, double q);
void blend(std::span<const double> a, std::span<const double> b, double w, std::span<double> out);
std::size_t threshold(std::span<const double> u, std::span<const double> prob, std::span<std::uint8_t> actions);

} // namespace scarcity::simd
