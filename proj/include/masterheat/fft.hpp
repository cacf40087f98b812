#pragma once

#include <complex>
#include <span>
#include <vector>

namespace masterheat {

/// Unnormalized multi-dimensional complex DFT (FFTW) over a row-major array.
///
/// Plans are created once per (dims, direction) and cached; creation is
/// serialized, execution is reentrant.
class Fft {
 public:
  enum class Direction { forward, backward };

  explicit Fft(std::vector<int> dims);

  void forward(std::span<std::complex<double>> data) const { run(data, Direction::forward); }
  /// Inverse transform including the 1/size normalization.
  void backward(std::span<std::complex<double>> data) const;

  std::size_t size() const { return size_; }

 private:
  void run(std::span<std::complex<double>> data, Direction dir) const;

  std::vector<int> dims_;
  std::size_t size_;
};

}  // namespace masterheat
