#ifndef CHEMPROT_TRAINER_H_
#define CHEMPROT_TRAINER_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "chemprot/config.h"
#include "chemprot/nn.h"

namespace chemprot {

struct TrainResult {
  // Mean per-unit training loss of each epoch, measured before each update.
  std::vector<double> epoch_losses;
  long steps = 0;
};

// Shuffled mini-batch loop with Adam. For every example in a batch it calls
// `step(example, scale)`, which must return the example's summed loss and
// accumulate gradients scaled by `scale` (1 / units in the batch, where
// `units(example)` is the number of loss terms an example contributes).
// Throws Error on a non-finite loss. A single writer owns the parameters.
TrainResult RunTraining(std::size_t num_examples, const TrainOptions &options,
                        std::uint64_t seed, std::span<Param *const> params,
                        const std::function<int(std::size_t)> &units,
                        const std::function<double(std::size_t, double)> &step,
                        const char *what);

}  // namespace chemprot

#endif  // CHEMPROT_TRAINER_H_
