#pragma once

#include <cstddef>
#include <vector>

namespace forenlab::metrics {

// Plain mean squared error over equally sized value arrays.
double mse(const std::vector<double>& a, const std::vector<double>& b);

// Peak signal-to-noise ratio against a fixed dynamic range of 1.0 (grids are
// normalised to [0,1]). Capped at 99 dB so identical inputs stay finite in
// reports.
double psnr(double mse_value, double range = 1.0);

// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
// stabilisers K1=0.01, K2=0.03, averaged over windows that fit entirely
// inside the grid. Both dimensions must be at least 11.
double ssim(const std::vector<double>& a, const std::vector<double>& b, std::size_t height,
            std::size_t width, double range = 1.0);

struct MetricTriple {
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

MetricTriple evaluate(const std::vector<double>& pred, const std::vector<double>& target,
                      std::size_t height, std::size_t width);

}  // namespace forenlab::metrics
