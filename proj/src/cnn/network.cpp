#include "cnn/network.hpp"

#include <algorithm>
#include <cmath>

namespace turngov::cnn {
namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T s = 0;
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void dropout_mask(std::vector<T>& mask, std::size_t n, double rate, Rng& rng) {
  mask.resize(n);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& m : mask) m = rng.uniform() < rate ? T(0) : scale;
}

}  // namespace

template <typename T>
std::vector<T> global_max_pool(std::span<const T> values, std::size_t positions,
                               std::size_t filters, std::vector<std::size_t>* argmax) {
  if (positions == 0 || values.size() != positions * filters) {
    throw InvalidArgument("pooling input has the wrong size");
  }
  std::vector<T> out(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(filters));
  if (argmax) argmax->assign(filters, 0);
  for (std::size_t p = 1; p < positions; ++p) {
    const T* row = values.data() + p * filters;
    for (std::size_t f = 0; f < filters; ++f) {
      if (row[f] > out[f]) {
        out[f] = row[f];
        if (argmax) (*argmax)[f] = p;
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> forward(const BasicCnnModel<T>& model, std::span<const std::size_t> tokens,
                       bool training, Rng* rng, Activations<T>* cache) {
  const auto& s = model.shape;
  const std::size_t L = tokens.size();
  if (L < s.kernel) throw InvalidArgument("sequence shorter than the convolution kernel");
  const bool drop = training && model.dropout > 0.0;
  if (drop && rng == nullptr) throw InvalidArgument("training forward needs a dropout RNG");

  Activations<T> local;
  Activations<T>& a = cache ? *cache : local;
  a.tokens.assign(tokens.begin(), tokens.end());

  // Embedding lookup.
  a.x.resize(L * s.embed);
  for (std::size_t l = 0; l < L; ++l) {
    if (tokens[l] >= s.vocab) throw InvalidArgument("token index out of range");
    const T* row = model.embedding.data.data() + tokens[l] * s.embed;
    std::copy(row, row + s.embed, a.x.begin() + static_cast<std::ptrdiff_t>(l * s.embed));
  }
  if (drop) {
    dropout_mask(a.mask1, a.x.size(), model.dropout, *rng);
    for (std::size_t i = 0; i < a.x.size(); ++i) a.x[i] *= a.mask1[i];
  } else {
    a.mask1.clear();
  }

  // Convolution: the receptive field of position p is x[p*embed, (p+kernel)*embed).
  const std::size_t P = L - s.kernel + 1;
  const std::size_t field = s.kernel * s.embed;
  a.z.resize(P * s.filters);
  for (std::size_t p = 0; p < P; ++p) {
    const T* xp = a.x.data() + p * s.embed;
    T* zp = a.z.data() + p * s.filters;
    for (std::size_t f = 0; f < s.filters; ++f) {
      zp[f] = model.conv_b.data[f] + dot(model.conv_w.data.data() + f * field, xp, field);
    }
  }

  // Max over time of relu(z) equals relu(max over time of z).
  a.pooled = global_max_pool<T>(a.z, P, s.filters, &a.argmax);
  for (auto& v : a.pooled) v = std::max(v, T(0));
  a.pooled_drop = a.pooled;
  if (drop) {
    dropout_mask(a.mask2, s.filters, model.dropout, *rng);
    for (std::size_t f = 0; f < s.filters; ++f) a.pooled_drop[f] *= a.mask2[f];
  } else {
    a.mask2.clear();
  }

  a.hidden_pre.resize(s.hidden);
  a.hidden.resize(s.hidden);
  for (std::size_t h = 0; h < s.hidden; ++h) {
    a.hidden_pre[h] = model.dense_b.data[h] +
                      dot(model.dense_w.data.data() + h * s.filters, a.pooled_drop.data(),
                          s.filters);
    a.hidden[h] = std::max(a.hidden_pre[h], T(0));
  }

  a.logits.resize(s.classes);
  for (std::size_t c = 0; c < s.classes; ++c) {
    a.logits[c] = model.out_b.data[c] +
                  dot(model.out_w.data.data() + c * s.hidden, a.hidden.data(), s.hidden);
  }
  const T top = *std::max_element(a.logits.begin(), a.logits.end());
  a.probs.resize(s.classes);
  T total = 0;
  for (std::size_t c = 0; c < s.classes; ++c) {
    a.probs[c] = std::exp(a.logits[c] - top);
    total += a.probs[c];
  }
  for (auto& p : a.probs) p /= total;
  return a.probs;
}

template <typename T>
double loss_and_gradients(const BasicCnnModel<T>& model, std::span<const LabeledSequence> batch,
                          BasicCnnModel<T>& grads, bool training, Rng* rng) {
  if (batch.empty()) throw InvalidArgument("loss needs a non-empty batch");
  const auto& s = model.shape;
  if (!(grads.shape == s)) grads = BasicCnnModel<T>(s, model.dropout);
  for (auto* t : grads.tensors()) t->zero();

  const T inv_batch = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  const std::size_t field = s.kernel * s.embed;
  double loss = 0.0;
  Activations<T> a;
  std::vector<T> d_logits(s.classes), d_hidden(s.hidden), d_pooled(s.filters);
  std::vector<T> d_x;

  for (const auto& example : batch) {
    if (example.label >= s.classes) throw InvalidArgument("label out of range");
    forward(model, example.tokens, training, rng, &a);

    // Stable log-softmax.
    const T top = *std::max_element(a.logits.begin(), a.logits.end());
    double lse = 0.0;
    for (auto v : a.logits) lse += std::exp(static_cast<double>(v - top));
    loss += std::log(lse) + static_cast<double>(top - a.logits[example.label]);

    for (std::size_t c = 0; c < s.classes; ++c) {
      d_logits[c] = (a.probs[c] - (c == example.label ? T(1) : T(0))) * inv_batch;
    }

    // Output layer.
    std::fill(d_hidden.begin(), d_hidden.end(), T(0));
    for (std::size_t c = 0; c < s.classes; ++c) {
      grads.out_b.data[c] += d_logits[c];
      axpy(d_logits[c], a.hidden.data(), grads.out_w.data.data() + c * s.hidden, s.hidden);
      axpy(d_logits[c], model.out_w.data.data() + c * s.hidden, d_hidden.data(), s.hidden);
    }

    // Dense + ReLU.
    std::fill(d_pooled.begin(), d_pooled.end(), T(0));
    for (std::size_t h = 0; h < s.hidden; ++h) {
      if (a.hidden_pre[h] <= T(0)) continue;
      const T g = d_hidden[h];
      grads.dense_b.data[h] += g;
      axpy(g, a.pooled_drop.data(), grads.dense_w.data.data() + h * s.filters, s.filters);
      axpy(g, model.dense_w.data.data() + h * s.filters, d_pooled.data(), s.filters);
    }
    if (!a.mask2.empty()) {
      for (std::size_t f = 0; f < s.filters; ++f) d_pooled[f] *= a.mask2[f];
    }

    // Pooling routes each filter's gradient to its argmax position; the conv
    // ReLU passes it only where the pre-activation is positive.
    d_x.assign(a.x.size(), T(0));
    for (std::size_t f = 0; f < s.filters; ++f) {
      const std::size_t p = a.argmax[f];
      if (a.z[p * s.filters + f] <= T(0)) continue;
      const T g = d_pooled[f];
      grads.conv_b.data[f] += g;
      axpy(g, a.x.data() + p * s.embed, grads.conv_w.data.data() + f * field, field);
      axpy(g, model.conv_w.data.data() + f * field, d_x.data() + p * s.embed, field);
    }
    if (!a.mask1.empty()) {
      for (std::size_t i = 0; i < d_x.size(); ++i) d_x[i] *= a.mask1[i];
    }
    for (std::size_t l = 0; l < a.tokens.size(); ++l) {
      axpy(T(1), d_x.data() + l * s.embed,
           grads.embedding.data.data() + a.tokens[l] * s.embed, s.embed);
    }
  }
  return loss / static_cast<double>(batch.size());
}

template <typename T>
double evaluate_loss(const BasicCnnModel<T>& model, std::span<const LabeledSequence> batch) {
  if (batch.empty()) throw InvalidArgument("loss needs a non-empty batch");
  double loss = 0.0;
  Activations<T> a;
  for (const auto& example : batch) {
    forward(model, example.tokens, false, nullptr, &a);
    const T top = *std::max_element(a.logits.begin(), a.logits.end());
    double lse = 0.0;
    for (auto v : a.logits) lse += std::exp(static_cast<double>(v - top));
    loss += std::log(lse) + static_cast<double>(top - a.logits.at(example.label));
  }
  return loss / static_cast<double>(batch.size());
}

#define TURNGOV_INSTANTIATE(T)                                                              \
  template std::vector<T> global_max_pool<T>(std::span<const T>, std::size_t, std::size_t,  \
                                             std::vector<std::size_t>*);                     \
  template std::vector<T> forward<T>(const BasicCnnModel<T>&, std::span<const std::size_t>, \
                                     bool, Rng*, Activations<T>*);                           \
  template double loss_and_gradients<T>(const BasicCnnModel<T>&,                            \
                                        std::span<const LabeledSequence>, BasicCnnModel<T>&, \
                                        bool, Rng*);                                         \
  template double evaluate_loss<T>(const BasicCnnModel<T>&, std::span<const LabeledSequence>);

TURNGOV_INSTANTIATE(float)
TURNGOV_INSTANTIATE(double)

#undef TURNGOV_INSTANTIATE

}  // namespace turngov::cnn
