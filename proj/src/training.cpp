#include "forenlab/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include "forenlab/metrics.hpp"
#include "forenlab/spectral.hpp"

namespace forenlab::training {

namespace {

void require_grid_pair(const Tensor& pred, const Tensor& target, const char* op) {
  if (pred.shape().size() != 2 || pred.shape() != target.shape())
    throw ShapeError(std::string(op) + ": grids disagree, " + shape_str(pred.shape()) + " vs " +
                     shape_str(target.shape()));
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require_grid_pair(pred, target, "mse_loss");
  Tensor d = sub(pred, target);
  return mean(mul(d, d));
}

Tensor freq_loss(const Tensor& pred, const Tensor& target) {
  require_grid_pair(pred, target, "freq_loss");
  Tensor pm = spectral::spectral_magnitude(pred);
  Tensor tm = spectral::spectral_magnitude(target);
  return mean(abs_elem(sub(pm, tm)));
}

Tensor total_loss(const Tensor& pred, const Tensor& target, const LossWeights& w) {
  if (w.lambda1 < 0.0 || w.lambda2 < 0.0 || w.lambda1 + w.lambda2 <= 0.0)
    throw ConfigError("total_loss: weights must be non-negative and not both zero, got lambda1=" +
                      std::to_string(w.lambda1) + " lambda2=" + std::to_string(w.lambda2));
  if (w.lambda2 == 0.0) return scale(mse_loss(pred, target), w.lambda1);
  if (w.lambda1 == 0.0) return scale(freq_loss(pred, target), w.lambda2);
  return add(scale(mse_loss(pred, target), w.lambda1), scale(freq_loss(pred, target), w.lambda2));
}

void Adam::step(std::map<std::string, Tensor>& params, double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (auto& [name, tensor] : params) {
    auto& [m, v] = moments_[name];
    if (m.empty()) {
      m.assign(tensor.numel(), 0.0);
      v.assign(tensor.numel(), 0.0);
    }
    const std::vector<double>& g = tensor.grad();
    std::vector<double>& w = tensor.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      double gi = g.empty() ? 0.0 : g[i];
      if (!std::isfinite(gi))
        throw NumericError("adam: non-finite gradient in parameter '" + name + "' at entry " +
                           std::to_string(i));
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double cosine_lr(std::size_t t, std::size_t total, double base_lr, double min_lr) {
  if (total < 1) throw ConfigError("cosine_lr: total steps must be at least 1");
  // explicit endpoints: min_lr + (base_lr - min_lr) is not always bitwise
  // base_lr, and the endpoints are contractual
  if (t == 0) return base_lr;
  if (t >= total) return min_lr;
  double frac = static_cast<double>(t) / static_cast<double>(total);
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

TrainReport train(models::Model& model, const data::Dataset& ds, const TrainOptions& opts) {
  if (ds.train.empty()) throw DataError("train: empty training split");
  if (opts.epochs < 0) throw ConfigError("train: negative epoch count");
  TrainReport report;
  if (opts.epochs == 0) return report;

  std::size_t n = ds.train.size();
  std::size_t batch = opts.batch_size <= 0 ? n : std::min<std::size_t>(opts.batch_size, n);
  std::size_t steps_per_epoch = (n + batch - 1) / batch;
  std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(opts.epochs);

  Adam adam(opts.adam);
  Rng shuffle_rng = Rng(opts.seed).fork(0x5C0FULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.integer(i)]);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cosine_lr(step, total_steps, opts.adam.lr, opts.min_lr);
    double sum_mse = 0.0, sum_freq = 0.0;
    bool aborted = false;
    for (std::size_t start = 0; start < n && !aborted; start += batch) {
      std::size_t stop = std::min(start + batch, n);
      model.zero_grads();
      Tensor batch_loss;
      for (std::size_t k = start; k < stop; ++k) {
        const data::SRPair& pair = ds.train[order[k]];
        Tensor lr_t = Tensor::from_data({pair.lr.height, pair.lr.width}, pair.lr.values);
        Tensor hr_t = Tensor::from_data({pair.hr.height, pair.hr.width}, pair.hr.values);
        Tensor pred = model.forward(lr_t);
        Tensor m = mse_loss(pred, hr_t);
        Tensor f = freq_loss(pred, hr_t);
        sum_mse += m.item();
        sum_freq += f.item();
        Tensor sample_loss = add(scale(m, opts.weights.lambda1), scale(f, opts.weights.lambda2));
        batch_loss = batch_loss.defined() ? add(batch_loss, sample_loss) : sample_loss;
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<double>(stop - start));
      if (!std::isfinite(batch_loss.item())) {
        report.nan_abort = true;
        report.abort_reason = "train: loss became non-finite in epoch " + std::to_string(epoch);
        aborted = true;
        break;
      }
      batch_loss.backward();
      try {
        adam.step(model.parameters(), cosine_lr(step, total_steps, opts.adam.lr, opts.min_lr));
      } catch (const NumericError& e) {
        report.nan_abort = true;
        report.abort_reason = e.what();
        aborted = true;
        break;
      }
      ++step;
    }
    if (aborted) break;  // keep only the completed epochs

    rec.mse_term = opts.weights.lambda1 * sum_mse / static_cast<double>(n);
    rec.freq_term = opts.weights.lambda2 * sum_freq / static_cast<double>(n);
    rec.loss = rec.mse_term + rec.freq_term;
    if (!ds.val.empty()) {
      NoGradGuard eval_guard;
      double vm = 0.0, vp = 0.0, vs = 0.0;
      for (const data::SRPair& pair : ds.val) {
        Tensor lr_t = Tensor::from_data({pair.lr.height, pair.lr.width}, pair.lr.values);
        Tensor pred = model.forward(lr_t);
        metrics::MetricTriple t =
            metrics::evaluate(pred.data(), pair.hr.values, pair.hr.height, pair.hr.width);
        vm += t.mse;
        vp += t.psnr;
        vs += t.ssim;
      }
      auto nv = static_cast<double>(ds.val.size());
      rec.val_mse = vm / nv;
      rec.val_psnr = vp / nv;
      rec.val_ssim = vs / nv;
    }
    if (opts.record_timing)
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(rec);
  }
  return report;
}

std::string report_csv(const TrainReport& r) {
  std::string out = "epoch,loss,mse_term,freq_term,val_mse,val_psnr,val_ssim,lr,seconds\n";
  for (const EpochRecord& e : r.epochs) {
    out += std::to_string(e.epoch);
    for (double v : {e.loss, e.mse_term, e.freq_term, e.val_mse, e.val_psnr, e.val_ssim, e.lr})
      out += "," + fmt_g(v);
    char sec[32];
    std::snprintf(sec, sizeof(sec), "%.3f", e.seconds);
    out += std::string(",") + sec + "\n";
  }
  return out;
}

void write_report_csv(const TrainReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_report_csv: cannot open " + path + " for writing");
  std::string csv = report_csv(r);
  out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!out) throw DataError("write_report_csv: short write to " + path);
}

SweepParam sweep_param_from_name(const std::string& name) {
  if (name == "omega0") return SweepParam::omega0;
  if (name == "f_c" || name == "fc") return SweepParam::f_c;
  if (name == "layers") return SweepParam::layers;
  throw ConfigError("unknown sweep parameter '" + name + "' (expected omega0, f_c or layers)");
}

const char* sweep_param_column(SweepParam p) {
  switch (p) {
    case SweepParam::omega0: return "omega0";
    case SweepParam::f_c: return "fc";
    case SweepParam::layers: return "layers";
  }
  throw ConfigError("sweep_param_column: unknown parameter");
}

std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& values,
                            const models::ModelConfig& base, const data::Dataset& ds,
                            const TrainOptions& opts, int workers) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  if (workers < 1) throw ConfigError("sweep: workers must be positive");
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto run_cell = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.value = values[i];
    try {
      models::ModelConfig cfg = base;
      switch (param) {
        case SweepParam::omega0: cfg.omega0 = values[i]; break;
        case SweepParam::f_c:
          cfg.f_low = values[i];
          cfg.f_high = values[i];
          break;
        case SweepParam::layers:
          cfg.siren_hidden_layers = static_cast<int>(std::llround(values[i]));
          break;
      }
      models::Model model(cfg, opts.seed);
      TrainReport rep = train(model, ds, opts);
      if (rep.nan_abort) {
        row.error = rep.abort_reason;
        return;
      }
      if (rep.epochs.empty() || ds.val.empty()) {
        row.error = "sweep: no validation metrics to report";
        return;
      }
      row.psnr = rep.epochs.back().val_psnr;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };
  if (workers == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
          run_cell(i);
      });
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

}  // namespace forenlab::training
