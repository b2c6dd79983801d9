#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcac/dataset.hpp"
#include "pcac/network.hpp"
#include "pcac/quantization.hpp"

namespace pcac {

struct TrainConfig {
  std::size_t epochs = 1200;
  std::size_t batch_size = 8;
  double learning_rate = 5e-4;
  double lambda = 1e4;  // weight on distortion against the rate term
  bool entropy_model = true;  // false drops the rate term from the loss
  QuantizerMode quantizer = QuantizerMode::kAdditiveNoise;
  bool chamfer_per_point = true;  // divide each cloud's Chamfer sum by its size
  std::uint64_t seed = 0;
  std::string log_path;         // CSV, one row per epoch; empty disables
  std::string checkpoint_path;  // model file rewritten periodically; empty disables
  std::size_t checkpoint_every = 100;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;        // mean per-item training objective
  double distortion = 0.0;  // mean Chamfer term (after per-point scaling if on)
  double rate_bits = 0.0;   // mean latent rate estimate; 0 when entropy is off
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
};

/// One training item's loss pieces, built on the caller's tape. Exposed so
/// tests can probe gradients of exactly the objective the trainer uses.
struct ItemLoss {
  Var loss;        // λ·distortion (+ rate when modelled)
  Var distortion;  // scalar
  Var rate;        // scalar; valid only when entropy_model
  bool has_rate = false;
};
ItemLoss rd_item_loss(Tape& t, ModelParameters& model, const PointCloud& item,
                      const TrainConfig& cfg, std::mt19937_64& rng);

/// Rate-distortion training over `data`. Shuffles deterministically by seed,
/// runs mini-batches with gradient averaging, one Adam step per batch.
/// Aborts with NumericError if the objective goes non-finite.
TrainLog train(ModelParameters& model, const std::vector<DatasetEntry>& data,
               const TrainConfig& cfg);

}  // namespace pcac
