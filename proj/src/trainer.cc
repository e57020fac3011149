#include "chemprot/trainer.h"

#include <cmath>
#include <numeric>

#include "chemprot/types.h"

namespace chemprot {

TrainResult RunTraining(std::size_t num_examples, const TrainOptions &options,
                        std::uint64_t seed, std::span<Param *const> params,
                        const std::function<int(std::size_t)> &units,
                        const std::function<double(std::size_t, double)> &step,
                        const char *what) {
  TrainResult result;
  if (num_examples == 0 || options.epochs == 0) return result;

  Rng rng(seed);
  Adam adam(AdamOptions{options.learning_rate, 0.9, 0.999, 1e-8, options.clip_norm});
  ZeroGrads(params);
  std::vector<std::size_t> order(num_examples);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = static_cast<std::size_t>(options.batch_size);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // Fisher-Yates with an explicit draw keeps the order identical across
    // standard library implementations.
    for (std::size_t i = num_examples - 1; i > 0; --i) {
      std::swap(order[i], order[rng() % (i + 1)]);
    }
    double epoch_loss = 0.0;
    long epoch_units = 0;
    for (std::size_t begin = 0; begin < num_examples; begin += batch) {
      const std::size_t end = std::min(begin + batch, num_examples);
      int batch_units = 0;
      for (std::size_t i = begin; i < end; ++i) batch_units += units(order[i]);
      if (batch_units == 0) continue;
      const double scale = 1.0 / batch_units;
      for (std::size_t i = begin; i < end; ++i) {
        const double loss = step(order[i], scale);
        if (!std::isfinite(loss)) {
          throw Error(std::string(what) + " training: non-finite loss at epoch " +
                      std::to_string(epoch + 1) + ", step " + std::to_string(result.steps + 1));
        }
        epoch_loss += loss;
      }
      epoch_units += batch_units;
      adam.Step(params);
      ++result.steps;
    }
    result.epoch_losses.push_back(epoch_units == 0 ? 0.0 : epoch_loss / epoch_units);
  }
  return result;
}

}  // namespace chemprot
