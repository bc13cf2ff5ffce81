#include "holo/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace holo::fft {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// FFTW_ESTIMATE keeps plan selection (and therefore the output bits) fixed.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard lock(mu_);
    const auto key = std::make_tuple(rows, cols, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cplx> scratch(static_cast<std::size_t>(rows) * cols);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run(std::span<cplx> data, int rows, int cols, int sign) {
  require(rows > 0 && cols > 0, "FFT dimensions must be positive");
  require(data.size() == static_cast<std::size_t>(rows) * cols, "FFT buffer does not match dimensions");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(rows, cols, sign), buf, buf);
}

}  // namespace

void forward(std::span<cplx> data, int rows, int cols) { run(data, rows, cols, FFTW_FORWARD); }

void inverse(std::span<cplx> data, int rows, int cols) {
  run(data, rows, cols, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(rows) * cols);
  for (cplx& v : data) v *= scale;
}

}  // namespace holo::fft
