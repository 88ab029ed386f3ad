#pragma once

#include <span>
#include <vector>

#include "cnn/model.hpp"

namespace turngov::cnn {

/// Intermediate values of one forward pass, kept for backpropagation.
template <typename T>
struct Activations {
  std::vector<std::size_t> tokens;
  std::vector<T> x;         // [L x embed], after dropout
  std::vector<T> mask1;     // [L x embed]; empty when dropout is off
  std::vector<T> z;         // [P x filters], convolution pre-activation
  std::vector<std::size_t> argmax;  // [filters], first position attaining the max
  std::vector<T> pooled;    // [filters], max over time of relu(z)
  std::vector<T> mask2;     // [filters]; empty when dropout is off
  std::vector<T> pooled_drop;
  std::vector<T> hidden_pre, hidden;  // [hidden]
  std::vector<T> logits, probs;       // [classes]
};

/// Global max over time: out[f] = max_p values[p * filters + f]. `argmax`
/// receives the first position attaining each maximum.
template <typename T>
std::vector<T> global_max_pool(std::span<const T> values, std::size_t positions,
                               std::size_t filters, std::vector<std::size_t>* argmax = nullptr);

/// embed -> dropout -> conv (stride 1) + ReLU -> global max pool -> dropout
/// -> dense + ReLU -> linear -> softmax. Dropout is applied only when
/// `training` is set and uses inverted scaling, drawing masks from `rng`.
template <typename T>
std::vector<T> forward(const BasicCnnModel<T>& model, std::span<const std::size_t> tokens,
                       bool training, Rng* rng = nullptr, Activations<T>* cache = nullptr);

struct LabeledSequence {
  std::vector<std::size_t> tokens;
  std::size_t label = 0;
};

/// Mean cross-entropy over `batch`; `grads` is overwritten with the gradient
/// of that mean with respect to every parameter tensor.
template <typename T>
double loss_and_gradients(const BasicCnnModel<T>& model, std::span<const LabeledSequence> batch,
                          BasicCnnModel<T>& grads, bool training, Rng* rng = nullptr);

/// Mean cross-entropy without dropout and without gradients.
template <typename T>
double evaluate_loss(const BasicCnnModel<T>& model, std::span<const LabeledSequence> batch);

}  // namespace turngov::cnn
