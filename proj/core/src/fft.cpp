#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

namespace chanmatch::detail {

namespace {
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}
} // namespace

Fft::Fft(std::size_t n) : n_(n)
{
  std::lock_guard lock(planner_mutex());
  data_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n));
  if (!data_)
    throw std::bad_alloc();
  auto* buf = reinterpret_cast<fftw_complex*>(data_);
  const int len = static_cast<int>(n);
  fwd_ = fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft()
{
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
  fftw_free(data_);
}

void Fft::forward() { fftw_execute(static_cast<fftw_plan>(fwd_)); }
void Fft::backward() { fftw_execute(static_cast<fftw_plan>(bwd_)); }

} // namespace chanmatch::detail
