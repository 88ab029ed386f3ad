#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace turngov::cnn {

struct CnnShape {
  std::size_t vocab = 0;
  std::size_t embed = 64;
  std::size_t filters = 64;
  std::size_t kernel = 3;
  std::size_t hidden = 300;
  std::size_t classes = 0;

  bool operator==(const CnnShape&) const = default;
};

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    data.assign(n, T(0));
  }
  std::size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  bool operator==(const Tensor&) const = default;
};

/// Parameters of the agent-and-content text classifier:
/// embedding [vocab x embed], conv [filters x (kernel*embed)] + bias,
/// dense [hidden x filters] + bias, output [classes x hidden] + bias.
/// Convolution weights for filter f are laid out window-row-major so the
/// receptive field of position p is the contiguous slice x[p*embed ...].
template <typename T>
struct BasicCnnModel {
  CnnShape shape;
  double dropout = 0.2;
  Tensor<T> embedding, conv_w, conv_b, dense_w, dense_b, out_w, out_b;

  BasicCnnModel() = default;
  explicit BasicCnnModel(const CnnShape& s, double dropout_rate = 0.2)
      : shape(s),
        dropout(dropout_rate),
        embedding({s.vocab, s.embed}),
        conv_w({s.filters, s.kernel * s.embed}),
        conv_b({s.filters}),
        dense_w({s.hidden, s.filters}),
        dense_b({s.hidden}),
        out_w({s.classes, s.hidden}),
        out_b({s.classes}) {
    if (s.vocab < 2 || s.embed == 0 || s.filters == 0 || s.kernel == 0 || s.hidden == 0 ||
        s.classes == 0) {
      throw InvalidArgument("every CNN dimension must be positive (vocab >= 2)");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw InvalidArgument("dropout rate must lie in [0, 1)");
    }
  }

  static constexpr std::size_t kTensorCount = 7;

  std::vector<Tensor<T>*> tensors() {
    return {&embedding, &conv_w, &conv_b, &dense_w, &dense_b, &out_w, &out_b};
  }
  std::vector<const Tensor<T>*> tensors() const {
    return {&embedding, &conv_w, &conv_b, &dense_w, &dense_b, &out_w, &out_b};
  }
  static const std::vector<std::string>& tensor_names() {
    static const std::vector<std::string> names = {"embedding", "conv_w", "conv_b", "dense_w",
                                                   "dense_b",   "out_w",  "out_b"};
    return names;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
  }

  /// Embedding uniform(-0.05, 0.05); conv and dense uniform(+-sqrt(6/fan_in));
  /// output uniform(+-sqrt(3/fan_in)); biases zero.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    auto fill = [&rng](Tensor<T>& t, double limit) {
      for (auto& x : t.data) x = static_cast<T>(rng.uniform(-limit, limit));
    };
    fill(embedding, 0.05);
    fill(conv_w, std::sqrt(6.0 / static_cast<double>(shape.kernel * shape.embed)));
    fill(dense_w, std::sqrt(6.0 / static_cast<double>(shape.filters)));
    fill(out_w, std::sqrt(3.0 / static_cast<double>(shape.hidden)));
    conv_b.zero();
    dense_b.zero();
    out_b.zero();
  }

  bool all_finite() const {
    for (const auto* t : tensors()) {
      for (auto x : t->data) {
        if (!std::isfinite(static_cast<double>(x))) return false;
      }
    }
    return true;
  }

  template <typename U>
  BasicCnnModel<U> cast() const {
    BasicCnnModel<U> out;
    out.shape = shape;
    out.dropout = dropout;
    auto src = tensors();
    auto dst = out.tensors();
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i]->shape = src[i]->shape;
      dst[i]->data.assign(src[i]->data.begin(), src[i]->data.end());
    }
    return out;
  }

  bool operator==(const BasicCnnModel&) const = default;
};

using CnnModel = BasicCnnModel<float>;

}  // namespace turngov::cnn
