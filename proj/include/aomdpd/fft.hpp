#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

namespace aomdpd::fft {

// FFTW plan creation is not thread-safe; execution through the plan's own
// arrays after creation is fine because each call owns its buffers.
inline std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

// Real-to-complex forward DFT, returning the n/2 + 1 non-negative-frequency bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n / 2 + 1);
    std::vector<double> in(x);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

// Complex forward DFT.
inline std::vector<std::complex<double>> cfft(const std::vector<std::complex<double>>& x) {
    std::vector<std::complex<double>> in(x), out(x.size());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(x.size()),
                                reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace aomdpd::fft
