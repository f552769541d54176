#include "scarcity/simd/kernels.hpp"

#include <immintrin.h>

namespace scarcity::simd {
namespace {

void disposition_filter_avx2(const double* p, const double* x, double* out, std::size_t n)
{
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d pp = _mm256_loadu_pd(p + i);
        const __m256d xx = _mm256_loadu_pd(x + i);
        const __m256d follow = _mm256_mul_pd(pp, xx);
        const __m256d oppose = _mm256_mul_pd(_mm256_sub_pd(one, pp), _mm256_sub_pd(one, xx));
        _mm256_storeu_pd(out + i, _mm256_add_pd(follow, oppose));
    }
    for (; i < n; ++i) {
        const double follow = p[i] * x[i];
        const double oppose = (1.0 - p[i]) * (1.0 - x[i]);
        out[i] = follow + oppose;
    }
}

void convolve_bernoulli_avx2(const double* in, double q, double* out, std::size_t n)
{
    const double r = 1.0 - q;
    if (n == 0) {
        out[0] = 0.0;
        return;
    }
    out[0] = in[0] * r;
    const __m256d rv = _mm256_set1_pd(r);
    const __m256d qv = _mm256_set1_pd(q);
    std::size_t k = 1;
    for (; k + 4 <= n; k += 4) {
        const __m256d stay = _mm256_mul_pd(_mm256_loadu_pd(in + k), rv);
        const __m256d step = _mm256_mul_pd(_mm256_loadu_pd(in + k - 1), qv);
        _mm256_storeu_pd(out + k, _mm256_add_pd(stay, step));
    }
    for (; k < n; ++k) {
        out[k] = in[k] * r + in[k - 1] * q;
    }
    out[n] = in[n - 1] * q;
}

void blend_avx2(const double* a, const double* b, double w, double* out, std::size_t n)
{
    const double r = 1.0 - w;
    const __m256d rv = _mm256_set1_pd(r);
    const __m256d wv = _mm256_set1_pd(w);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d lhs = _mm256_mul_pd(rv, _mm256_loadu_pd(a + i));
        const __m256d rhs = _mm256_mul_pd(wv, _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(lhs, rhs));
    }
    for (; i < n; ++i) {
        out[i] = r * a[i] + w * b[i];
    }
}

std::size_t threshold_avx2(const double* u, const double* prob, std::uint8_t* actions, std::size_t n)
{
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d lt = _mm256_cmp_pd(_mm256_loadu_pd(u + i), _mm256_loadu_pd(prob + i), _CMP_LT_OQ);
        const int mask = _mm256_movemask_pd(lt);
        for (int lane = 0; lane < 4; ++lane) {
            actions[i + lane] = static_cast<std::uint8_t>((mask >> lane) & 1);
        }
        count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
    }
    for (; i < n; ++i) {
        const bool hit = u[i] < prob[i];
        actions[i] = hit ? 1 : 0;
        count += hit;
    }
    return count;
}

} // namespace

const KernelTable& avx2_kernels()
{
    static const KernelTable table{Isa::avx2, disposition_filter_avx2, convolve_bernoulli_avx2, blend_avx2,
                                   threshold_avx2};
    return table;
}

} // namespace scarcity::simd
