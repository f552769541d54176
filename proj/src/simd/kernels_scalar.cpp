#include "scarcity/simd/kernels.hpp"

namespace scarcity::simd {
namespace {

void disposition_filter_scalar(const double* p, const double* x, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double follow = p[i] * x[i];
        const double oppose = (1.0 - p[i]) * (1.0 - x[i]);
        out[i] = follow + oppose;
    }
}

void convolve_bernoulli_scalar(const double* in, double q, double* out, std::size_t n)
{
    const double r = 1.0 - q;
    if (n == 0) {
        out[0] = 0.0;
        return;
    }
    out[0] = in[0] * r;
    for (std::size_t k = 1; k < n; ++k) {
        out[k] = in[k] * r + in[k - 1] * q;
    }
    out[n] = in[n - 1] * q;
}

void blend_scalar(const double* a, const double* b, double w, double* out, std::size_t n)
{
    const double r = 1.0 - w;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = r * a[i] + w * b[i];
    }
}

std::size_t threshold_scalar(const double* u, const double* prob, std::uint8_t* actions, std::size_t n)
{
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool hit = u[i] < prob[i];
        actions[i] = hit ? 1 : 0;
        count += hit;
    }
    return count;
}

} // namespace

const KernelTable& scalar_kernels()
{
    static const KernelTable table{Isa::scalar, disposition_filter_scalar, convolve_bernoulli_scalar,
                                   blend_scalar, threshold_scalar};
    return table;
}

} // namespace scarcity::simd
