#include "scarcity/simd/kernels.hpp"

#include <arm_neon.h>

namespace scarcity::simd {
namespace {

void disposition_filter_neon(const double* p, const double* x, double* out, std::size_t n)
{
    const float64x2_t one = vdupq_n_f64(1.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t pp = vld1q_f64(p + i);
        const float64x2_t xx = vld1q_f64(x + i);
        const float64x2_t follow = vmulq_f64(pp, xx);
        const float64x2_t oppose = vmulq_f64(vsubq_f64(one, pp), vsubq_f64(one, xx));
        vst1q_f64(out + i, vaddq_f64(follow, oppose));
    }
    for (; i < n; ++i) {
        const double follow = p[i] * x[i];
        const double oppose = (1.0 - p[i]) * (1.0 - x[i]);
        out[i] = follow + oppose;
    }
}

void convolve_bernoulli_neon(const double* in, double q, double* out, std::size_t n)
{
    const double r = 1.0 - q;
    if (n == 0) {
        out[0] = 0.0;
        return;
    }
    out[0] = in[0] * r;
    const float64x2_t rv = vdupq_n_f64(r);
    const float64x2_t qv = vdupq_n_f64(q);
    std::size_t k = 1;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t stay = vmulq_f64(vld1q_f64(in + k), rv);
        const float64x2_t step = vmulq_f64(vld1q_f64(in + k - 1), qv);
        vst1q_f64(out + k, vaddq_f64(stay, step));
    }
    for (; k < n; ++k) {
        out[k] = in[k] * r + in[k - 1] * q;
    }
    out[n] = in[n - 1] * q;
}

void blend_neon(const double* a, const double* b, double w, double* out, std::size_t n)
{
    const double r = 1.0 - w;
    const float64x2_t rv = vdupq_n_f64(r);
    const float64x2_t wv = vdupq_n_f64(w);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vaddq_f64(vmulq_f64(rv, vld1q_f64(a + i)), vmulq_f64(wv, vld1q_f64(b + i))));
    }
    for (; i < n; ++i) {
        out[i] = r * a[i] + w * b[i];
    }
}

std::size_t threshold_neon(const double* u, const double* prob, std::uint8_t* actions, std::size_t n)
{
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t lt = vcltq_f64(vld1q_f64(u + i), vld1q_f64(prob + i));
        const std::uint8_t a0 = vgetq_lane_u64(lt, 0) ? 1 : 0;
        const std::uint8_t a1 = vgetq_lane_u64(lt, 1) ? 1 : 0;
        actions[i] = a0;
        actions[i + 1] = a1;
        count += a0 + a1;
    }
    for (; i < n; ++i) {
        const bool hit = u[i] < prob[i];
        actions[i] = hit ? 1 : 0;
        count += hit;
    }
    return count;
}

} // namespace

const KernelTable& neon_kernels()
{
    static const KernelTable table{Isa::neon, disposition_filter_neon, convolve_bernoulli_neon, blend_neon,
                                   threshold_neon};
    return table;
}

} // namespace scarcity::simd
