#pragma once

// Periodic lattice shared by the noise synthesis and the dynamics.
// Sites are ordered x-fastest: site = ix + n*(iy + n*iz).

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace gravdec {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

struct Grid {
  int dim = 1;         // 1 or 3
  int n = 16;          // points per axis, power of two
  double spacing = 1;  // lattice constant

  void validate() const;  // throws std::invalid_argument
  std::size_t sites() const;
  double length() const { return n * spacing; }

  std::array<int, 3> coords(std::size_t site) const;
  std::size_t site(std::array<int, 3> c) const;  // wraps periodically
  /// Displacement index of site b relative to site a, wrapped into [0, n) per axis.
  std::array<int, 3> offset(std::size_t a, std::size_t b) const;

  /// FFT wavenumbers 2*pi*fftfreq(n, spacing), Nyquist included as -pi/a.
  std::vector<double> wavenumbers() const;
  double wavenumber(int index) const;
  /// Wavevector of reciprocal-lattice site (same ordering as real-space sites);
  /// components beyond dim are zero.
  std::array<double, 3> wavevector(std::size_t q) const;
  double position(int index) const { return index * spacing; }

  bool operator==(const Grid& o) const { return dim == o.dim && n == o.n && spacing == o.spacing; }
};

/// In-place multi-dimensional DFT on grid-ordered data. The forward transform
/// is unnormalized, the inverse carries 1/N, matching numpy.fft.
class Spectral {
 public:
  explicit Spectral(const Grid& g);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  void forward(CVec& data) const;
  void inverse(CVec& data) const;
  const Grid& grid() const { return grid_; }

 private:
  void transform(CVec& data, bool inverse) const;
  Grid grid_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gravdec
