#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <vector>

#include "rslam/core.hpp"

namespace rslam {

using Complex = std::complex<double>;
using ComplexGrid = Grid<Complex>;

namespace fft {

// FFTW planning is not thread-safe; all plans here are created with
// FFTW_ESTIMATE on the calling thread and destroyed immediately.
class Plan {
 public:
  Plan(fftw_plan p) : plan_(p) {
    if (!plan_) throw Error("fft", "FFTW failed to create a plan");
  }
  ~Plan() { fftw_destroy_plan(plan_); }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

/// In-place 2D DFT. The inverse is scaled by 1/(rows*cols).
inline void transform(ComplexGrid& g, bool inverse) {
  if (g.empty()) return;
  Plan plan(fftw_plan_dft_2d(int(g.rows()), int(g.cols()), as_fftw(g.data().data()), as_fftw(g.data().data()),
                             inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE));
  plan.execute();
  if (inverse) {
    const double scale = 1.0 / double(g.size());
    for (auto& z : g.data()) z *= scale;
  }
}

inline ComplexGrid forward(const RealGrid& img) {
  ComplexGrid g(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) g.data()[i] = img.data()[i];
  transform(g, false);
  return g;
}

inline ComplexGrid forward(ComplexGrid g) {
  transform(g, false);
  return g;
}

inline ComplexGrid inverse(ComplexGrid g) {
  transform(g, true);
  return g;
}

/// 1D DFT; the inverse is scaled by 1/n.
inline std::vector<Complex> transform(std::vector<Complex> x, bool inverse) {
  if (x.empty()) return x;
  Plan plan(fftw_plan_dft_1d(int(x.size()), as_fftw(x.data()), as_fftw(x.data()),
                             inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE));
  plan.execute();
  if (inverse) {
    const double scale = 1.0 / double(x.size());
    for (auto& z : x) z *= scale;
  }
  return x;
}

/// Move the zero-frequency bin to (rows/2, cols/2).
template <typename T>
Grid<T> shift_to_center(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  const std::size_t hr = g.rows() / 2, hc = g.cols() / 2;
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) out((r + hr) % g.rows(), (c + hc) % g.cols()) = g(r, c);
  return out;
}

}  // namespace fft
}  // namespace rslam
