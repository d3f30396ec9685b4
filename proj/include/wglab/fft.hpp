#pragma once

/// @file fft.hpp
/// Thin RAII layer over FFTW for the unnormalized complex transforms used by
/// spectra, FFT counting and convolution gauges.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace wglab {

using cplx = std::complex<double>;

namespace detail {

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};

inline void run_dft(std::vector<cplx>& data, int sign)
{
    const std::size_t n = data.size();
    if (n == 0) return;
    std::unique_ptr<fftw_complex, FftwFree> buf(fftw_alloc_complex(n));
    if (!buf) throw std::bad_alloc();
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), buf.get(), buf.get(), sign, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fftw: plan creation failed");
    auto* raw = reinterpret_cast<cplx*>(buf.get());
    std::copy(data.begin(), data.end(), raw);
    fftw_execute(plan);
    std::copy(raw, raw + n, data.begin());
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

} // namespace detail

/// out[j] = sum_n in[n] e(+nj/M), unnormalized.
inline void dft_positive(std::vector<cplx>& data) { detail::run_dft(data, FFTW_BACKWARD); }

/// out[j] = sum_n in[n] e(-nj/M), unnormalized.
inline void dft_negative(std::vector<cplx>& data) { detail::run_dft(data, FFTW_FORWARD); }

inline std::size_t next_pow2(std::size_t n) noexcept
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Unit root e(t/q) for an exactly reduced numerator 0 <= t < q.
inline cplx unit_root(unsigned long long t, unsigned long long q)
{
    const double theta = 2.0 * 3.14159265358979323846 * (static_cast<long double>(t) / static_cast<long double>(q));
    return {std::cos(theta), std::sin(theta)};
}

} // namespace wglab
