#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>

#include <fftw3.h>

namespace soqdyn::fft {

using Complex = std::complex<double>;

/// Plan quality. Estimate gives bit-reproducible plans across process
/// invocations; Measure is ~3x faster but the chosen algorithm (and hence
/// last-bit rounding) may differ between processes. Within one process a
/// plan is created once and reused, so results stay self-consistent.
enum class Planning { Estimate, Measure };

inline Planning& planning_mode() {
  static Planning mode = Planning::Estimate;
  return mode;
}

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Owns an aligned n*n complex buffer with in-place forward/backward DFT
/// plans. Propagators keep their state inside the buffer between steps so
/// transforms run exactly as planned, with no per-step copies.
class Workspace {
 public:
  explicit Workspace(int n) : n_(n) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size()));
    if (!buf_) throw std::bad_alloc();
    const unsigned flags =
        planning_mode() == Planning::Measure ? FFTW_MEASURE : FFTW_ESTIMATE;
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_BACKWARD, flags);
    if (!fwd_ || !bwd_) throw std::runtime_error("fftw plan creation failed");
  }

  ~Workspace() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  Complex* data() { return reinterpret_cast<Complex*>(buf_); }
  const Complex* data() const { return reinterpret_cast<const Complex*>(buf_); }
  std::span<Complex> view() { return {data(), size()}; }

  /// Unnormalized in-place DFTs (FFTW convention).
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }

 private:
  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Shared per-size workspace for one-shot transforms (field copies in/out).
/// Not for concurrent use from multiple threads; propagators own their own.
inline Workspace& shared_workspace(int n) {
  static std::map<int, std::unique_ptr<Workspace>> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Workspace>(n);
  return *slot;
}

}  // namespace soqdyn::fft
