#include "scarcity/simd/kernels.hpp"

#include <cstdlib>
#include <string>

#include "scarcity/error.hpp"

namespace scarcity::simd {

std::string_view to_string(Isa isa)
{
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    }
    return "unknown";
}

std::vector<const KernelTable*> available_kernels()
{
    std::vector<const KernelTable*> tables{&scalar_kernels()};
#if defined(SCARCITY_HAVE_AVX2)
    if (__builtin_cpu_supports("avx2")) {
        tables.push_back(&avx2_kernels());
    }
#endif
#if defined(SCARCITY_HAVE_NEON)
    tables.push_back(&neon_kernels());
#endif
    return tables;
}

namespace {

const KernelTable& select_kernels()
{
    const auto tables = available_kernels();
    if (const char* forced = std::getenv("SCARCITY_SIMD"); forced != nullptr && *forced != '\0') {
        for (const auto* table : tables) {
            if (to_string(table->isa) == forced) {
                return *table;
            }
        }
        throw InvalidArgument(std::string("SCARCITY_SIMD=") + forced + " is not available on this machine");
    }
    return *tables.back();
}

void check_sizes(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) {
        throw InvalidArgument(std::string(what) + ": span length mismatch");
    }
}

} // namespace

const KernelTable& active_kernels()
{
    static const KernelTable& table = select_kernels();
    return table;
}

void disposition_filter(std::span<const double> p, std::span<const double> x, std::span<double> out)
{
    check_sizes(p.size(), x.size(), "disposition_filter");
    check_sizes(p.size(), out.size(), "disposition_filter");
    active_kernels().disposition_filter(p.data(), x.data(), out.data(), p.size());
}

std::vector<double> convolve_bernoulli(std::span<const double> in, double q)
{
    std::vector<double> out(in.size() + 1);
    active_kernels().convolve_bernoulli(in.data(), q, out.data(), in.size());
    return out;
}

void blend(std::span<const double> a, std::span<const double> b, double w, std::span<double> out)
{
    check_sizes(a.size(), b.size(), "blend");
    check_sizes(a.size(), out.size(), "blend");
    active_kernels().blend(a.data(), b.data(), w, out.data(), a.size());
}

std::size_t threshold(std::span<const double> u, std::span<const double> prob, std::span<std::uint8_t> actions)
{
    check_sizes(u.size(), prob.size(), "threshold");
    check_sizes(u.size(), actions.size(), "threshold");
    return active_kernels().threshold(u.data(), prob.data(), actions.data(), u.size());
}

} // namespace scarcity::simd
