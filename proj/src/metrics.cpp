#include "forenlab/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "forenlab/common.hpp"

namespace forenlab::metrics {

namespace {

constexpr std::size_t kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

// normalised 11x11 Gaussian window, built once
const std::array<double, kWin * kWin>& gaussian_window() {
  static const std::array<double, kWin * kWin> w = [] {
    std::array<double, kWin * kWin> g{};
    double total = 0.0;
    int half = static_cast<int>(kWin) / 2;
    for (int i = -half; i <= half; ++i)
      for (int j = -half; j <= half; ++j) {
        double v = std::exp(-(i * i + j * j) / (2.0 * kSigma * kSigma));
        g[static_cast<std::size_t>(i + half) * kWin + static_cast<std::size_t>(j + half)] = v;
        total += v;
      }
    for (double& v : g) v /= total;
    return g;
  }();
  return w;
}

}  // namespace

double mse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw ShapeError("mse: value counts differ, " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(double mse_value, double range) {
  if (mse_value < 0.0) throw NumericError("psnr: negative mse " + std::to_string(mse_value));
  if (mse_value == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(range * range / mse_value));
}

double ssim(const std::vector<double>& a, const std::vector<double>& b, std::size_t height,
            std::size_t width, double range) {
  if (a.size() != b.size() || a.size() != height * width)
    throw ShapeError("ssim: " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                     " values do not form matching " + std::to_string(height) + "x" +
                     std::to_string(width) + " grids");
  if (height < kWin || width < kWin)
    throw ConfigError("ssim: grid " + std::to_string(height) + "x" + std::to_string(width) +
                      " is smaller than the 11x11 window");
  const auto& w = gaussian_window();
  const double c1 = (kK1 * range) * (kK1 * range);
  const double c2 = (kK2 * range) * (kK2 * range);
  double acc = 0.0;
  std::size_t n_windows = 0;
  for (std::size_t i = 0; i + kWin <= height; ++i)
    for (std::size_t j = 0; j + kWin <= width; ++j) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (std::size_t y = 0; y < kWin; ++y)
        for (std::size_t x = 0; x < kWin; ++x) {
          double wv = w[y * kWin + x];
          double av = a[(i + y) * width + (j + x)];
          double bv = b[(i + y) * width + (j + x)];
          mu_a += wv * av;
          mu_b += wv * bv;
          aa += wv * (av * av);
          bb += wv * (bv * bv);
          // grouped so the product commutes bitwise and ssim(a,b)==ssim(b,a)
          ab += wv * (av * bv);
        }
      double var_a = aa - mu_a * mu_a;
      double var_b = bb - mu_b * mu_b;
      double cov = ab - mu_a * mu_b;
      acc += ((2.0 * (mu_a * mu_b) + c1) * (2.0 * cov + c2)) /
             ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++n_windows;
    }
  return acc / static_cast<double>(n_windows);
}

MetricTriple evaluate(const std::vector<double>& pred, const std::vector<double>& target,
                      std::size_t height, std::size_t width) {
  MetricTriple m;
  m.mse = mse(pred, target);
  m.psnr = psnr(m.mse);
  m.ssim = ssim(pred, target, height, width);
  return m;
}

}  // namespace forenlab::metrics
