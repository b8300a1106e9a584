#pragma once

#include <cstddef>
#include <vector>

#include "forenlab/tensor.hpp"

namespace forenlab::spectral {

struct ComplexGrid {
  std::size_t height = 0, width = 0;
  std::vector<double> re, im;

  std::size_t size() const { return re.size(); }
};

// Unnormalised forward 2D transform: X[u,v] = sum_p x[p] e^{-2pi i <k,p>/N}.
// Power-of-two line lengths take the radix-2 path, others the direct sum.
ComplexGrid dft2(const std::vector<double>& x, std::size_t height, std::size_t width);
ComplexGrid dft2c(const ComplexGrid& x);

// Inverse transform with the 1/(H*W) normalisation. The real-output variant
// rejects spectra whose inverse has an imaginary residue above 1e-6
// (relative to the largest real component): such spectra do not describe a
// real grid.
ComplexGrid idft2c(const ComplexGrid& X);
std::vector<double> idft2(const ComplexGrid& X);

// Radius of bin (u,v) in the signed frequency plane, normalised so the
// corner bin (Nyquist on both axes) sits at exactly 1.
double radial_frequency(std::size_t u, std::size_t v, std::size_t height, std::size_t width);

enum class MaskKind { low_pass, high_pass };

struct FreqMask {
  MaskKind kind;
  double cutoff;
  std::size_t height, width;
  std::vector<double> gains;  // binary, one per bin, row-major
};

// Ideal binary mask: low_pass keeps radii <= cutoff (the DC bin always
// passes), high_pass is its exact complement. cutoff must lie in (0, 1].
FreqMask make_mask(MaskKind kind, double cutoff, std::size_t height, std::size_t width);

// idft2(dft2(x) .* gains) on raw grids.
std::vector<double> filter_grid(const std::vector<double>& x, const FreqMask& mask);

// Differentiable frequency filtering. The mask is binary and symmetric, so
// the operation is self-adjoint: backward applies the same mask to the
// incoming gradient.
Tensor foren_apply(const Tensor& grid, const FreqMask& mask);

// Applies the mask to each embedding channel of a token lattice: column c of
// the (rows*cols) x D matrix is reshaped to rows x cols, filtered, written
// back.
Tensor foren_channels(const Tensor& tokens, std::size_t rows, std::size_t cols,
                      const FreqMask& mask);

// |dft2(x)| per bin, differentiable. Zero-magnitude bins get zero gradient.
Tensor spectral_magnitude(const Tensor& grid);

// Radial energy profile. Band b covers radii [edges[b], edges[b+1]) with the
// last band closed on the right; edges are n_bands+1 equally spaced values
// over [0, 1]. energy[b] = sum of |X|^2/(H*W) over the band's bins, so the
// band energies add up to the spatial sum of squares (Parseval).
struct BandSpectrum {
  std::vector<double> edges;
  std::vector<double> energy;
  std::vector<double> mean_power;  // energy[b] / count[b]
  std::vector<std::size_t> count;

  double total_energy() const;
};

BandSpectrum band_spectrum(const std::vector<double>& x, std::size_t height, std::size_t width,
                           std::size_t n_bands);

}  // namespace forenlab::spectral
