#include "aimlake/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "aimlake/error.hpp"

namespace aimlake {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft2::Fft2(int points) : points_(points) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  const std::size_t n = static_cast<std::size_t>(points) * points;
  fftw_complex* a = fftw_alloc_complex(n);
  fftw_complex* b = fftw_alloc_complex(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_2d(points, points, a, b, FFTW_FORWARD, flags);
  backward_plan_ = fftw_plan_dft_2d(points, points, a, b, FFTW_BACKWARD, flags);
  fftw_free(a);
  fftw_free(b);
  if (!forward_plan_ || !backward_plan_) throw Error(ErrorKind::InvalidGrid, "FFTW planning failed");
}

Fft2::~Fft2() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void Fft2::forward(const CArray& in, CArray& out) const {
  out.resize(in.size());
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_),
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void Fft2::backward(const CArray& in, CArray& out) const {
  out.resize(in.size());
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_),
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace aimlake
