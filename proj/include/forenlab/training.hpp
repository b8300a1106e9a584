#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "forenlab/data.hpp"
#include "forenlab/models.hpp"
#include "forenlab/tensor.hpp"

namespace forenlab::training {

struct LossWeights {
  double lambda1 = 1.0;  // MSE weight
  double lambda2 = 0.1;  // frequency-loss weight
};

Tensor mse_loss(const Tensor& pred, const Tensor& target);
// Mean absolute difference of the two magnitude spectra (one value per bin,
// averaged over all bins). Phase-insensitive and differentiable.
Tensor freq_loss(const Tensor& pred, const Tensor& target);
Tensor total_loss(const Tensor& pred, const Tensor& target, const LossWeights& w);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Parameters whose gradient buffer is
// empty are treated as having zero gradient.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // applies one update at the given learning rate; throws NumericError
  // naming the first parameter whose gradient contains a non-finite value
  void step(std::map<std::string, Tensor>& params, double lr);
  int steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  int t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

// min_lr + 0.5*(base_lr - min_lr)*(1 + cos(pi*t/total)); t past total clamps
// to min_lr
double cosine_lr(std::size_t t, std::size_t total, double base_lr = 1e-4, double min_lr = 1e-6);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;       // mse_term + freq_term
  double mse_term = 0.0;   // lambda1 * mean train MSE
  double freq_term = 0.0;  // lambda2 * mean train frequency loss
  double val_mse = 0.0;
  double val_psnr = 0.0;
  double val_ssim = 0.0;
  double lr = 0.0;  // learning rate of the epoch's first step
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  bool nan_abort = false;
  std::string abort_reason;
};

struct TrainOptions {
  int epochs = 300;
  int batch_size = 0;  // 0 or less = full batch
  LossWeights weights;
  AdamConfig adam;
  double min_lr = 1e-6;
  std::uint64_t seed = 7;
  // wall-clock timing is off by default so reports are bitwise reproducible
  bool record_timing = false;
};

// Seed-deterministic loop: shuffled (mini-)batches, cosine-decayed Adam,
// per-epoch validation metrics. A non-finite loss or gradient aborts the run
// and the report keeps only the completed epochs.
TrainReport train(models::Model& model, const data::Dataset& ds, const TrainOptions& opts);

std::string report_csv(const TrainReport& r);
void write_report_csv(const TrainReport& r, const std::string& path);

enum class SweepParam { omega0, f_c, layers };

SweepParam sweep_param_from_name(const std::string& name);
// column header used in sweep CSVs ("omega0", "fc", "layers")
const char* sweep_param_column(SweepParam p);

struct SweepRow {
  double value = 0.0;
  double psnr = 0.0;  // final-epoch validation PSNR
  bool ok = false;
  std::string error;
};

// Trains one model per value from the same seed and collects the final
// validation PSNR. Failures are recorded per cell and do not stop the sweep.
// workers > 1 runs cells on that many threads.
std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& values,
                            const models::ModelConfig& base, const data::Dataset& ds,
                            const TrainOptions& opts, int workers = 1);

}  // namespace forenlab::training
