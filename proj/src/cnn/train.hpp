#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "cnn/network.hpp"

namespace turngov::cnn {

struct TrainConfig {
  std::size_t epochs = 3;
  double learning_rate = 0.001;
  std::size_t batch_size = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument for non-positive values.
  void validate() const;
};

/// Adam with bias correction; moments live in tensors shaped like the model.
template <typename T>
class Adam {
 public:
  Adam(const BasicCnnModel<T>& like, const TrainConfig& config);

  void step(BasicCnnModel<T>& model, const BasicCnnModel<T>& grads);
  std::size_t steps() const { return step_; }

 private:
  TrainConfig config_;
  BasicCnnModel<T> m_, v_;
  std::size_t step_ = 0;
};

/// Called after every minibatch with (epoch, batch index, batch loss).
using TrainProgress = std::function<void(std::size_t, std::size_t, double)>;

/// Seeded-shuffle minibatch training. The result depends only on the inputs:
/// the shuffle order and every dropout mask derive from `config.seed`.
template <typename T>
BasicCnnModel<T> train(BasicCnnModel<T> model, const TrainConfig& config,
                       std::span<const LabeledSequence> data,
                       const TrainProgress& progress = {});

}  // namespace turngov::cnn
