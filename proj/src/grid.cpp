#include "gravdec/grid.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace gravdec {

void Grid::validate() const {
  if (dim != 1 && dim != 3) throw std::invalid_argument("grid dim must be 1 or 3, got " + std::to_string(dim));
  if (n < 2 || (n & (n - 1)) != 0)
    throw std::invalid_argument("grid n must be a power of two >= 2, got " + std::to_string(n));
  if (!(spacing > 0) || !std::isfinite(spacing)) throw std::invalid_argument("grid spacing must be positive");
}

std::size_t Grid::sites() const {
  std::size_t s = 1;
  for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(n);
  return s;
}

std::array<int, 3> Grid::coords(std::size_t s) const {
  std::array<int, 3> c{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    c[static_cast<std::size_t>(d)] = static_cast<int>(s % static_cast<std::size_t>(n));
    s /= static_cast<std::size_t>(n);
  }
  return c;
}

std::size_t Grid::site(std::array<int, 3> c) const {
  std::size_t s = 0;
  for (int d = dim - 1; d >= 0; --d) {
    const int w = ((c[static_cast<std::size_t>(d)] % n) + n) % n;
    s = s * static_cast<std::size_t>(n) + static_cast<std::size_t>(w);
  }
  return s;
}

std::array<int, 3> Grid::offset(std::size_t a, std::size_t b) const {
  const auto ca = coords(a);
  const auto cb = coords(b);
  std::array<int, 3> o{0, 0, 0};
  for (std::size_t d = 0; d < 3; ++d) o[d] = ((cb[d] - ca[d]) % n + n) % n;
  return o;
}

double Grid::wavenumber(int j) const {
  return (j < n / 2 ? j : j - n) * 2 * std::numbers::pi / (n * spacing);
}

std::vector<double> Grid::wavenumbers() const {
  std::vector<double> k(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) k[static_cast<std::size_t>(j)] = wavenumber(j);
  return k;
}

std::array<double, 3> Grid::wavevector(std::size_t q) const {
  const auto c = coords(q);
  std::array<double, 3> out{0, 0, 0};
  for (std::size_t d = 0; d < static_cast<std::size_t>(dim); ++d) out[d] = wavenumber(c[d]);
  return out;
}

struct Spectral::Impl {
  mutable std::mutex mu;  // Eigen::FFT caches twiddles internally
  mutable Eigen::FFT<double> fft;
};

Spectral::Spectral(const Grid& g) : grid_(g), impl_(std::make_unique<Impl>()) {
  grid_.validate();
  impl_->fft.SetFlag(Eigen::FFT<double>::Unscaled);
}

Spectral::~Spectral() = default;

void Spectral::forward(CVec& data) const { transform(data, false); }
void Spectral::inverse(CVec& data) const { transform(data, true); }

void Spectral::transform(CVec& data, bool inverse) const {
  const auto n = static_cast<std::size_t>(grid_.n);
  const std::size_t total = grid_.sites();
  if (data.size() != total) throw std::invalid_argument("Spectral: data size does not match grid");
  std::lock_guard<std::mutex> lock(impl_->mu);
  std::vector<cplx> line(n), out(n);
  std::size_t stride = 1;
  for (int d = 0; d < grid_.dim; ++d) {
    for (std::size_t base = 0; base < total; ++base) {
      // first element of each line along axis d has coordinate 0 on that axis
      if ((base / stride) % n != 0) continue;
      for (std::size_t j = 0; j < n; ++j) line[j] = data[base + j * stride];
      if (inverse)
        impl_->fft.inv(out, line);
      else
        impl_->fft.fwd(out, line);
      for (std::size_t j = 0; j < n; ++j) data[base + j * stride] = out[j];
    }
    stride *= n;
  }
  if (inverse) {
    const double s = 1.0 / static_cast<double>(total);
    for (auto& z : data) z *= s;
  }
}

}  // namespace gravdec
