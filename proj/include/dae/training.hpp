#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dae/network.hpp"

namespace dae {

struct AdamHyper {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 10;
    AdamHyper adam;
    LossKind loss = LossKind::bce;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-epoch mean training loss and end-of-epoch validation loss (NaN when there is no
/// validation set).
struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
};

/// First and second moment estimates congruent with the parameters.
struct OptimizerState {
    NetworkParams m;
    NetworkParams v;
    std::int64_t step = 0;

    static OptimizerState for_params(const NetworkParams& params);
};

/// Bias-corrected Adam update applied in place.
void adam_step(NetworkParams& params, const NetworkParams& grads, OptimizerState& state,
               const AdamHyper& hyper);

struct IndexSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Seeded partition of [0, n) with round(fraction * n) validation indices (sorted).
IndexSplit validation_split(std::size_t n, double fraction, std::uint64_t seed);

/// Mean loss of the model over (inputs, targets), evaluated in chunks of `batch_size`.
double evaluate_loss(const NetworkParams& params, const Architecture& arch, const Tensor& inputs,
                     const Tensor& targets, LossKind kind, int batch_size);

struct TrainResult {
    NetworkParams params;
    TrainHistory history;
};

/// Called between epochs with the 1-based epoch number and the history so far.
using EpochCallback = std::function<void(int epoch, const TrainHistory& history)>;

/// Mini-batch training of `arch` to map `noisy_inputs` onto `clean_targets`. Validation
/// pairs are held out once; training pairs are reshuffled every epoch and the final
/// partial batch is kept. Throws NumericError if the loss becomes non-finite.
TrainResult train(const Tensor& noisy_inputs, const Tensor& clean_targets, const Architecture& arch,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace dae
