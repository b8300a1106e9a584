#include "forenlab/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace forenlab::spectral {

namespace {

constexpr double kTau = 6.283185307179586476925287;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place length-n transform of one line. sign = -1 forward, +1 inverse.
// No normalisation here; idft2 applies the single 1/(H*W) factor.
void line_transform(double* re, double* im, std::size_t n, int sign) {
  if (n == 1) return;
  if (is_pow2(n)) {
    // radix-2: bit-reversal permutation, then butterflies
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) {
        std::swap(re[i], re[j]);
        std::swap(im[i], im[j]);
      }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      double ang = sign * kTau / static_cast<double>(len);
      double wr = std::cos(ang), wi = std::sin(ang);
      for (std::size_t i = 0; i < n; i += len) {
        double cr = 1.0, ci = 0.0;
        for (std::size_t j = 0; j < len / 2; ++j) {
          std::size_t a = i + j, b = i + j + len / 2;
          double tr = re[b] * cr - im[b] * ci;
          double ti = re[b] * ci + im[b] * cr;
          re[b] = re[a] - tr;
          im[b] = im[a] - ti;
          re[a] += tr;
          im[a] += ti;
          double ncr = cr * wr - ci * wi;
          ci = cr * wi + ci * wr;
          cr = ncr;
        }
      }
    }
    return;
  }
  // direct sum for awkward lengths
  std::vector<double> or_(n, 0.0), oi(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc_r = 0.0, acc_i = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double ang = sign * kTau * static_cast<double>(k * p % n) / static_cast<double>(n);
      double c = std::cos(ang), s = std::sin(ang);
      acc_r += re[p] * c - im[p] * s;
      acc_i += re[p] * s + im[p] * c;
    }
    or_[k] = acc_r;
    oi[k] = acc_i;
  }
  std::copy(or_.begin(), or_.end(), re);
  std::copy(oi.begin(), oi.end(), im);
}

void transform2(ComplexGrid& g, int sign) {
  std::size_t h = g.height, w = g.width;
  for (std::size_t r = 0; r < h; ++r) line_transform(g.re.data() + r * w, g.im.data() + r * w, w, sign);
  std::vector<double> cre(h), cim(h);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) {
      cre[r] = g.re[r * w + c];
      cim[r] = g.im[r * w + c];
    }
    line_transform(cre.data(), cim.data(), h, sign);
    for (std::size_t r = 0; r < h; ++r) {
      g.re[r * w + c] = cre[r];
      g.im[r * w + c] = cim[r];
    }
  }
}

void require_dims(std::size_t h, std::size_t w, std::size_t n, const char* op) {
  if (h == 0 || w == 0 || h * w != n)
    throw ShapeError(std::string(op) + ": " + std::to_string(n) + " values do not form a " +
                     std::to_string(h) + "x" + std::to_string(w) + " grid");
}

}  // namespace

ComplexGrid dft2(const std::vector<double>& x, std::size_t height, std::size_t width) {
  require_dims(height, width, x.size(), "dft2");
  ComplexGrid g{height, width, x, std::vector<double>(x.size(), 0.0)};
  transform2(g, -1);
  return g;
}

ComplexGrid dft2c(const ComplexGrid& x) {
  ComplexGrid g = x;
  require_dims(g.height, g.width, g.re.size(), "dft2c");
  transform2(g, -1);
  return g;
}

ComplexGrid idft2c(const ComplexGrid& X) {
  ComplexGrid g = X;
  require_dims(g.height, g.width, g.re.size(), "idft2c");
  transform2(g, +1);
  double inv = 1.0 / static_cast<double>(g.height * g.width);
  for (double& v : g.re) v *= inv;
  for (double& v : g.im) v *= inv;
  return g;
}

std::vector<double> idft2(const ComplexGrid& X) {
  ComplexGrid g = idft2c(X);
  double max_re = 0.0, max_im = 0.0;
  for (double v : g.re) max_re = std::max(max_re, std::abs(v));
  for (double v : g.im) max_im = std::max(max_im, std::abs(v));
  if (max_im > 1e-6 * std::max(1.0, max_re))
    throw NumericError("idft2: spectrum is not conjugate-symmetric, imaginary residue " +
                       std::to_string(max_im));
  return std::move(g.re);
}

double radial_frequency(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  // signed per-axis frequencies in cycles/sample; even sizes put Nyquist at +1/2
  double fu = (2 * u <= height) ? static_cast<double>(u) / static_cast<double>(height)
                                : static_cast<double>(u) / static_cast<double>(height) - 1.0;
  double fv = (2 * v <= width) ? static_cast<double>(v) / static_cast<double>(width)
                               : static_cast<double>(v) / static_cast<double>(width) - 1.0;
  return std::sqrt(2.0 * (fu * fu + fv * fv));
}

FreqMask make_mask(MaskKind kind, double cutoff, std::size_t height, std::size_t width) {
  if (!(cutoff > 0.0) || cutoff > 1.0)
    throw ConfigError("make_mask: cutoff must lie in (0, 1], got " + std::to_string(cutoff));
  if (height == 0 || width == 0) throw ShapeError("make_mask: empty grid");
  FreqMask m{kind, cutoff, height, width, std::vector<double>(height * width, 0.0)};
  for (std::size_t u = 0; u < height; ++u)
    for (std::size_t v = 0; v < width; ++v) {
      bool low = radial_frequency(u, v, height, width) <= cutoff;
      bool keep = (kind == MaskKind::low_pass) ? low : !low;
      m.gains[u * width + v] = keep ? 1.0 : 0.0;
    }
  return m;
}

std::vector<double> filter_grid(const std::vector<double>& x, const FreqMask& mask) {
  require_dims(mask.height, mask.width, x.size(), "filter_grid");
  ComplexGrid X = dft2(x, mask.height, mask.width);
  for (std::size_t i = 0; i < X.size(); ++i) {
    X.re[i] *= mask.gains[i];
    X.im[i] *= mask.gains[i];
  }
  return idft2(X);
}

Tensor foren_apply(const Tensor& grid, const FreqMask& mask) {
  if (grid.shape().size() != 2 || grid.shape()[0] != mask.height || grid.shape()[1] != mask.width)
    throw ShapeError("foren_apply: grid " + shape_str(grid.shape()) + " does not match a " +
                     std::to_string(mask.height) + "x" + std::to_string(mask.width) + " mask");
  std::vector<double> out = filter_grid(grid.data(), mask);
  return Tensor(detail::make_op(grid.shape(), std::move(out), {grid.node()},
                                [mask](detail::Node& self) {
                                  // binary symmetric mask: the filter is its own adjoint
                                  std::vector<double> gin = filter_grid(self.grad, mask);
                                  for (std::size_t i = 0; i < gin.size(); ++i)
                                    self.inputs[0]->accumulate(i, gin[i]);
                                }));
}

Tensor foren_channels(const Tensor& tokens, std::size_t rows, std::size_t cols,
                      const FreqMask& mask) {
  if (tokens.shape().size() != 2 || tokens.shape()[0] != rows * cols)
    throw ShapeError("foren_channels: tokens " + shape_str(tokens.shape()) +
                     " do not form a " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " lattice");
  if (mask.height != rows || mask.width != cols)
    throw ShapeError("foren_channels: mask is " + std::to_string(mask.height) + "x" +
                     std::to_string(mask.width) + ", lattice is " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  std::size_t n = rows * cols, d = tokens.shape()[1];
  std::vector<double> out(n * d);
  std::vector<double> chan(n);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) chan[i] = tokens.data()[i * d + c];
    std::vector<double> f = filter_grid(chan, mask);
    for (std::size_t i = 0; i < n; ++i) out[i * d + c] = f[i];
  }
  return Tensor(detail::make_op({n, d}, std::move(out), {tokens.node()},
                                [n, d, mask](detail::Node& self) {
                                  std::vector<double> chan(n);
                                  for (std::size_t c = 0; c < d; ++c) {
                                    for (std::size_t i = 0; i < n; ++i) chan[i] = self.grad[i * d + c];
                                    std::vector<double> f = filter_grid(chan, mask);
                                    for (std::size_t i = 0; i < n; ++i)
                                      self.inputs[0]->accumulate(i * d + c, f[i]);
                                  }
                                }));
}

Tensor spectral_magnitude(const Tensor& grid) {
  if (grid.shape().size() != 2)
    throw ShapeError("spectral_magnitude: expected a 2D grid, got " + shape_str(grid.shape()));
  std::size_t h = grid.shape()[0], w = grid.shape()[1];
  ComplexGrid X = dft2(grid.data(), h, w);
  std::vector<double> mag(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) mag[i] = std::hypot(X.re[i], X.im[i]);
  return Tensor(detail::make_op(
      grid.shape(), std::move(mag), {grid.node()}, [X = std::move(X)](detail::Node& self) {
        // d|X_k|/dx_p = Re(conj(X_k)/|X_k| * e^{-2pi i <k,p>/N}), so the input
        // gradient is the real part of a forward transform of g*conj(X)/|X|.
        ComplexGrid c{X.height, X.width, std::vector<double>(X.size(), 0.0),
                      std::vector<double>(X.size(), 0.0)};
        for (std::size_t i = 0; i < X.size(); ++i) {
          double m = self.value[i];
          if (m <= 0.0) continue;
          double s = self.grad[i] / m;
          c.re[i] = s * X.re[i];
          c.im[i] = -s * X.im[i];
        }
        ComplexGrid g = dft2c(c);
        for (std::size_t i = 0; i < g.size(); ++i) self.inputs[0]->accumulate(i, g.re[i]);
      }));
}

double BandSpectrum::total_energy() const {
  double t = 0.0;
  for (double e : energy) t += e;
  return t;
}

BandSpectrum band_spectrum(const std::vector<double>& x, std::size_t height, std::size_t width,
                           std::size_t n_bands) {
  if (n_bands < 2) throw ConfigError("band_spectrum: need at least 2 bands, got " +
                                     std::to_string(n_bands));
  require_dims(height, width, x.size(), "band_spectrum");
  BandSpectrum bs;
  bs.edges.resize(n_bands + 1);
  for (std::size_t b = 0; b <= n_bands; ++b)
    bs.edges[b] = static_cast<double>(b) / static_cast<double>(n_bands);
  bs.energy.assign(n_bands, 0.0);
  bs.mean_power.assign(n_bands, 0.0);
  bs.count.assign(n_bands, 0);
  ComplexGrid X = dft2(x, height, width);
  double inv = 1.0 / static_cast<double>(height * width);
  for (std::size_t u = 0; u < height; ++u)
    for (std::size_t v = 0; v < width; ++v) {
      double r = radial_frequency(u, v, height, width);
      std::size_t b = std::min(static_cast<std::size_t>(r * static_cast<double>(n_bands)),
                               n_bands - 1);
      std::size_t i = u * width + v;
      bs.energy[b] += (X.re[i] * X.re[i] + X.im[i] * X.im[i]) * inv;
      bs.count[b] += 1;
    }
  for (std::size_t b = 0; b < n_bands; ++b)
    if (bs.count[b] > 0) bs.mean_power[b] = bs.energy[b] / static_cast<double>(bs.count[b]);
  return bs;
}

}  // namespace forenlab::spectral
