#include "cnn/train.hpp"

#include <cmath>
#include <numeric>

namespace turngov::cnn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size == 0 || !(epsilon > 0.0) ||
      !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("invalid training configuration");
  }
}

template <typename T>
Adam<T>::Adam(const BasicCnnModel<T>& like, const TrainConfig& config)
    : config_(config), m_(like.shape, like.dropout), v_(like.shape, like.dropout) {}

template <typename T>
void Adam<T>::step(BasicCnnModel<T>& model, const BasicCnnModel<T>& grads) {
  ++step_;
  const double t = static_cast<double>(step_);
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(config_.beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(config_.beta2, t)));
  const T lr = static_cast<T>(config_.learning_rate);
  const T eps = static_cast<T>(config_.epsilon);
  // Moments of rarely-seen embedding rows decay towards subnormal range,
  // where float arithmetic is very slow; flush them to zero instead.
  const T tiny = static_cast<T>(1e-30);

  auto params = model.tensors();
  auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t k = 0; k < params.size(); ++k) {
    T* p = params[k]->data.data();
    const T* gk = g[k]->data.data();
    T* mk = m[k]->data.data();
    T* vk = v[k]->data.data();
    const std::size_t n = params[k]->size();
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) {
      mk[i] = b1 * mk[i] + (T(1) - b1) * gk[i];
      vk[i] = b2 * vk[i] + (T(1) - b2) * gk[i] * gk[i];
      mk[i] = std::abs(mk[i]) < tiny ? T(0) : mk[i];
      vk[i] = vk[i] < tiny ? T(0) : vk[i];
      p[i] -= lr * (mk[i] * c1) / (std::sqrt(vk[i] * c2) + eps);
    }
  }
}

template <typename T>
BasicCnnModel<T> train(BasicCnnModel<T> model, const TrainConfig& config,
                       std::span<const LabeledSequence> data, const TrainProgress& progress) {
  config.validate();
  if (data.empty()) throw InvalidArgument("training data is empty");
  if (config.epochs == 0) return model;

  Adam<T> adam(model, config);
  BasicCnnModel<T> grads(model.shape, model.dropout);
  Rng dropout_rng(derive_seed(config.seed, 0xd509ULL));
  std::vector<std::size_t> order(data.size());
  std::vector<LabeledSequence> batch;
  batch.reserve(config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, 0x5aff1eULL + epoch));
    shuffle_rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      const double loss = loss_and_gradients(model, std::span<const LabeledSequence>(batch),
                                             grads, true, &dropout_rng);
      adam.step(model, grads);
      if (progress) progress(epoch, batch_index, loss);
      ++batch_index;
    }
  }
  return model;
}

template class Adam<float>;
template class Adam<double>;
template BasicCnnModel<float> train<float>(BasicCnnModel<float>, const TrainConfig&,
                                           std::span<const LabeledSequence>,
                                           const TrainProgress&);
template BasicCnnModel<double> train<double>(BasicCnnModel<double>, const TrainConfig&,
                                             std::span<const LabeledSequence>,
                                             const TrainProgress&);

}  // namespace turngov::cnn
