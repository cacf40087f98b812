#include "masterheat/fft.hpp"

#include <cstring>
#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

#include "masterheat/error.hpp"

namespace masterheat {

namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_plan plan_for(const std::vector<int>& dims, int sign, std::size_t size) {
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  auto key = std::make_pair(dims, sign);
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
  auto* buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size));
  fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buffer, buffer, sign, FFTW_ESTIMATE);
  fftw_free(buffer);
  if (plan == nullptr) throw NumericalError("fft: plan creation failed");
  c.plans.emplace(key, plan);
  return plan;
}

struct AlignedBuffer {
  explicit AlignedBuffer(std::size_t n) : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {}
  ~AlignedBuffer() { fftw_free(data); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

Fft::Fft(std::vector<int> dims) : dims_(std::move(dims)), size_(1) {
  if (dims_.empty()) throw InvalidArgument("fft: no dimensions");
  for (int d : dims_) {
    if (d < 1) throw InvalidArgument("fft: dimension must be positive");
    size_ *= static_cast<std::size_t>(d);
  }
}

void Fft::run(std::span<std::complex<double>> data, Direction dir) const {
  if (data.size() != size_) throw InvalidArgument("fft: buffer size does not match plan");
  const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan plan = plan_for(dims_, sign, size_);
  AlignedBuffer buffer(size_);
  std::memcpy(buffer.data, data.data(), sizeof(fftw_complex) * size_);
  fftw_execute_dft(plan, buffer.data, buffer.data);
  std::memcpy(static_cast<void*>(data.data()), buffer.data, sizeof(fftw_complex) * size_);
}

void Fft::backward(std::span<std::complex<double>> data) const {
  run(data, Direction::backward);
  const double scale = 1.0 / static_cast<double>(size_);
  for (auto& v : data) v *= scale;
}

}  // namespace masterheat
