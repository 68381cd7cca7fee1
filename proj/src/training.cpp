#include "dae/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dae/error.hpp"
#include "dae/rng.hpp"

namespace dae {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
    if (batch_size < 1) throw ConfigError("batch size must be >= 1, got " + std::to_string(batch_size));
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation fraction must lie in [0, 1)");
    if (!(adam.step_size > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0))
        throw ConfigError("invalid Adam hyperparameters");
}

OptimizerState OptimizerState::for_params(const NetworkParams& params) {
    OptimizerState s;
    s.m = params;
    for (auto& b : s.m.blocks) {
        std::fill(b.kernels.begin(), b.kernels.end(), 0.0f);
        std::fill(b.bias.begin(), b.bias.end(), 0.0f);
    }
    s.v = s.m;
    return s;
}

namespace {

bool congruent(const NetworkParams& a, const NetworkParams& b) {
    if (a.blocks.size() != b.blocks.size()) return false;
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        if (a.blocks[i].kernels.size() != b.blocks[i].kernels.size() ||
            a.blocks[i].bias.size() != b.blocks[i].bias.size())
            return false;
    return true;
}

void adam_update(std::vector<float>& w, const std::vector<float>& g, std::vector<float>& m,
                 std::vector<float>& v, const AdamHyper& h, double correction1, double correction2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i];
        const double mi = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
        const double vi = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        const double m_hat = mi / correction1;
        const double v_hat = vi / correction2;
        w[i] = static_cast<float>(w[i] - h.step_size * m_hat / (std::sqrt(v_hat) + h.eps));
    }
}

}  // namespace

void adam_step(NetworkParams& params, const NetworkParams& grads, OptimizerState& state,
               const AdamHyper& hyper) {
    if (!congruent(params, grads) || !congruent(params, state.m) || !congruent(params, state.v))
        throw ConfigError("adam_step: parameter, gradient and optimizer structures differ");
    ++state.step;
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        adam_update(params.blocks[b].kernels, grads.blocks[b].kernels, state.m.blocks[b].kernels,
                    state.v.blocks[b].kernels, hyper, c1, c2);
        adam_update(params.blocks[b].bias, grads.blocks[b].bias, state.m.blocks[b].bias,
                    state.v.blocks[b].bias, hyper, c1, c2);
    }
}

IndexSplit validation_split(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in [0, 1)");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RandomStream rng(seed, /*stream_id=*/0x56414C44);  // "VALD"
    shuffle(order, rng);
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    IndexSplit s;
    s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(s.validation.begin(), s.validation.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

double evaluate_loss(const NetworkParams& params, const Architecture& arch, const Tensor& inputs,
                     const Tensor& targets, LossKind kind, int batch_size) {
    if (inputs.batch() == 0) return std::numeric_limits<double>::quiet_NaN();
    double weighted = 0.0;
    for (int first = 0; first < inputs.batch(); first += batch_size) {
        const int count = std::min(batch_size, inputs.batch() - first);
        const Tensor pred = predict(params, arch, inputs.slice_batch(first, count));
        weighted += loss_value(pred, targets.slice_batch(first, count), kind) * count;
    }
    return weighted / inputs.batch();
}

TrainResult train(const Tensor& noisy_inputs, const Tensor& clean_targets, const Architecture& arch,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    validate_architecture(arch);
    if (noisy_inputs.shape() != clean_targets.shape())
        throw ShapeError("batch", "noisy inputs " + noisy_inputs.shape().str() +
                                      " and clean targets " + clean_targets.shape().str() + " differ");
    if (noisy_inputs.batch() == 0) throw DataError("training set is empty");

    const IndexSplit split =
        validation_split(static_cast<std::size_t>(noisy_inputs.batch()), config.validation_fraction, config.seed);
    if (split.train.empty()) throw DataError("no training pairs remain after the validation split");
    if (static_cast<std::size_t>(config.batch_size) > split.train.size())
        throw ConfigError("batch size " + std::to_string(config.batch_size) + " exceeds the " +
                          std::to_string(split.train.size()) + " training pairs");

    const Tensor val_in = noisy_inputs.gather_batch(split.validation);
    const Tensor val_out = clean_targets.gather_batch(split.validation);

    TrainResult result{init_params(arch, config.seed), {}};
    OptimizerState state = OptimizerState::for_params(result.params);
    RandomStream rng(config.seed, /*stream_id=*/0x53485546);  // "SHUF"
    std::vector<std::size_t> order = split.train;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        double weighted = 0.0;
        for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                                            order.size() - first);
            const std::span<const std::size_t> idx(order.data() + first, count);
            const Tensor x = noisy_inputs.gather_batch(idx);
            const Tensor y = clean_targets.gather_batch(idx);
            ForwardResult fwd = forward(result.params, arch, x);
            LossResult l = loss(fwd.reconstruction, y, config.loss);
            if (!std::isfinite(l.value))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
            const NetworkParams grads = backward(result.params, arch, fwd.cache, l.grad);
            adam_step(result.params, grads, state, config.adam);
            weighted += l.value * static_cast<double>(count);
        }
        if (!result.params.all_finite())
            throw NumericError("non-finite parameters after epoch " + std::to_string(epoch));
        result.history.train_loss.push_back(weighted / static_cast<double>(order.size()));
        result.history.validation_loss.push_back(
            evaluate_loss(result.params, arch, val_in, val_out, config.loss, config.batch_size));
        if (on_epoch) on_epoch(epoch, result.history);
    }
    return result;
}

}  // namespace dae
