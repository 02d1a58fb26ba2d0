#pragma once

#include <complex>
#include <vector>

namespace sspde {

// Cached FFTW plans for n x n complex transforms. forward() includes the 1/n^2
// factor so that it returns Fourier coefficients; backward() synthesizes.
class Fft2d {
public:
    static const Fft2d& get(int n);

    int n() const { return n_; }
    void forward(const std::complex<double>* in, std::complex<double>* out) const;
    void backward(const std::complex<double>* in, std::complex<double>* out) const;

    void forward_real(const double* in, std::complex<double>* out) const;
    void backward_real(const std::complex<double>* in, double* out) const;

    ~Fft2d();
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

private:
    explicit Fft2d(int n);
    int n_;
    void* fwd_;
    void* bwd_;
};

}  // namespace sspde
