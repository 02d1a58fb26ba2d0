#include "sspde/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace sspde {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Fft2d::Fft2d(int n) : n_(n) {
    std::vector<std::complex<double>> a(static_cast<std::size_t>(n) * n), b(a.size());
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_dft_2d(n, n, pa, pb, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_2d(n, n, pa, pb, FFTW_BACKWARD, flags);
}

Fft2d::~Fft2d() {
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

const Fft2d& Fft2d::get(int n) {
    std::lock_guard<std::mutex> lock(plan_mutex());
    static std::map<int, std::unique_ptr<Fft2d>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::unique_ptr<Fft2d>(new Fft2d(n))).first;
    return *it->second;
}

void Fft2d::forward(const std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(static_cast<fftw_plan>(fwd_),
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / (static_cast<double>(n_) * n_);
    const std::size_t m = static_cast<std::size_t>(n_) * n_;
    for (std::size_t i = 0; i < m; ++i) out[i] *= s;
}

void Fft2d::backward(const std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(static_cast<fftw_plan>(bwd_),
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void Fft2d::forward_real(const double* in, std::complex<double>* out) const {
    const std::size_t m = static_cast<std::size_t>(n_) * n_;
    std::vector<std::complex<double>> tmp(in, in + m);
    forward(tmp.data(), out);
}

void Fft2d::backward_real(const std::complex<double>* in, double* out) const {
    const std::size_t m = static_cast<std::size_t>(n_) * n_;
    std::vector<std::complex<double>> tmp(m);
    backward(in, tmp.data());
    for (std::size_t i = 0; i < m; ++i) out[i] = tmp[i].real();
}

}  // namespace sspde
