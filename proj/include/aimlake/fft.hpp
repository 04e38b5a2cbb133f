#pragma once

#include <complex>
#include <vector>

namespace aimlake {

using cplx = std::complex<double>;
using CArray = std::vector<cplx>;

/// Thin RAII wrapper around a pair of FFTW 2D complex plans of size M x M.
/// Execution is thread-safe; plans are created under a global lock.
/// forward:  X[k] = sum_n x[n] exp(-2 pi i k.n / M)   (unnormalized)
/// backward: x[n] = sum_k X[k] exp(+2 pi i k.n / M)
class Fft2 {
 public:
  explicit Fft2(int points);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  int points() const { return points_; }
  void forward(const CArray& in, CArray& out) const;
  void backward(const CArray& in, CArray& out) const;

 private:
  int points_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

/// Index of signed frequency k in an FFT array of length M.
inline int wrap_index(int k, int m) { return ((k % m) + m) % m; }
/// Signed frequency stored at FFT index i (Nyquist reported as -M/2).
inline int signed_freq(int i, int m) { return i < m / 2 ? i : i - m; }

}  // namespace aimlake
