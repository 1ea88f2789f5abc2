#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace chanmatch::detail {

// In-place complex FFT over an owned buffer. Unnormalized in both directions.
// Plans are created under a global lock; execution is thread-safe per instance.
class Fft {
public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::size_t size() const { return n_; }
  std::span<std::complex<double>> buffer() { return {data_, n_}; }

  void forward();
  void backward();

private:
  std::size_t n_;
  std::complex<double>* data_;
  void* fwd_;
  void* bwd_;
};

} // namespace chanmatch::detail
