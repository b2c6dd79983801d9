#include "pcac/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "pcac/chamfer.hpp"
#include "pcac/errors.hpp"
#include "pcac/model_io.hpp"
#include "pcac/optimizer.hpp"

namespace pcac {

ItemLoss rd_item_loss(Tape& t, ModelParameters& model, const PointCloud& item,
                      const TrainConfig& cfg, std::mt19937_64& rng) {
  const Var pts = t.input(points_tensor(item));
  const Var z = encode_op(t, model, pts, /*train=*/true);
  const Var zq = quantize_op(t, z, cfg.quantizer, rng);
  const Var recon = decode_op(t, model, zq, /*train=*/true);
  const Var cham = chamfer_op(t, recon, pts);

  ItemLoss out;
  out.distortion =
      cfg.chamfer_per_point ? t.scale(cham, 1.0 / static_cast<double>(item.size())) : cham;
  const Var weighted = t.scale(out.distortion, cfg.lambda);
  if (cfg.entropy_model) {
    out.rate = model.density.rate_bits_op(t, zq);
    out.has_rate = true;
    out.loss = t.add(weighted, out.rate);
  } else {
    out.loss = weighted;
  }
  return out;
}

TrainLog train(ModelParameters& model, const std::vector<DatasetEntry>& data,
               const TrainConfig& cfg) {
  if (data.empty()) throw DataError("train: empty dataset");
  if (cfg.batch_size == 0) throw UsageError("train: batch size must be positive");
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw UsageError("train: lambda must be finite and nonnegative");
  }
  for (const DatasetEntry& e : data) {
    if (e.cloud.size() != model.config.input_points) {
      throw DataError("train: \"" + e.name + "\" has " + std::to_string(e.cloud.size()) +
                      " points, model expects " + std::to_string(model.config.input_points));
    }
  }

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.learning_rate;
  Adam opt(model.trainable(), adam_cfg);
  std::mt19937_64 noise_rng(cfg.seed);

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path, std::ios::trunc);
    if (!log) throw DataError(cfg.log_path + ": cannot open training log");
    log << "epoch,loss,distortion,rate_bits,seconds\n";
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainLog out;
  out.epochs.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 shuffle_rng(cfg.seed * 0x9e3779b97f4a7c15ull + epoch + 1);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      opt.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        Tape t;
        const ItemLoss item = rd_item_loss(t, model, data[order[b]].cloud, cfg, noise_rng);
        const double loss_value = t.value(item.loss).data[0];
        if (!std::isfinite(loss_value)) {
          throw NumericError("train: objective went non-finite at epoch " +
                             std::to_string(epoch) + " on \"" + data[order[b]].name + "\"");
        }
        stats.loss += loss_value;
        stats.distortion += t.value(item.distortion).data[0];
        if (item.has_rate) stats.rate_bits += t.value(item.rate).data[0];
        t.backward(t.scale(item.loss, inv_batch));  // gradients accumulate across the batch
      }
      opt.step();
    }
    const double n = static_cast<double>(data.size());
    stats.loss /= n;
    stats.distortion /= n;
    stats.rate_bits /= n;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.epochs.push_back(stats);

    if (log.is_open()) {
      char line[160];
      std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g,%.10g,%.4f\n", epoch, stats.loss,
                    stats.distortion, stats.rate_bits, stats.seconds);
      log << line;
      log.flush();
    }
    const bool last = epoch + 1 == cfg.epochs;
    if (!cfg.checkpoint_path.empty() &&
        ((epoch + 1) % cfg.checkpoint_every == 0 || last)) {
      save_model(model, cfg.checkpoint_path);
    }
  }
  return out;
}

}  // namespace pcac
