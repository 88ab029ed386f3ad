#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cnn/network.hpp"
#include "common/rng.hpp"

namespace oracles {

/// Scalar recomputation of the classifier forward pass (no dropout), written
/// from the layer definitions with explicit index arithmetic.
inline std::vector<double> scalar_forward(const turngov::cnn::BasicCnnModel<double>& m,
                                          const std::vector<std::size_t>& tokens) {
  const auto& s = m.shape;
  const std::size_t positions = tokens.size() - s.kernel + 1;
  std::vector<double> pooled(s.filters, 0.0);
  for (std::size_t f = 0; f < s.filters; ++f) {
    double best = -INFINITY;
    for (std::size_t p = 0; p < positions; ++p) {
      double z = m.conv_b.data[f];
      for (std::size_t k = 0; k < s.kernel; ++k) {
        for (std::size_t e = 0; e < s.embed; ++e) {
          const double w = m.conv_w.data[f * s.kernel * s.embed + k * s.embed + e];
          const double x = m.embedding.data[tokens[p + k] * s.embed + e];
          z += w * x;
        }
      }
      best = std::max(best, z > 0.0 ? z : 0.0);
    }
    pooled[f] = best;
  }
  std::vector<double> hidden(s.hidden);
  for (std::size_t h = 0; h < s.hidden; ++h) {
    double a = m.dense_b.data[h];
    for (std::size_t f = 0; f < s.filters; ++f) a += m.dense_w.data[h * s.filters + f] * pooled[f];
    hidden[h] = a > 0.0 ? a : 0.0;
  }
  std::vector<double> logits(s.classes);
  for (std::size_t c = 0; c < s.classes; ++c) {
    double a = m.out_b.data[c];
    for (std::size_t h = 0; h < s.hidden; ++h) a += m.out_w.data[c * s.hidden + h] * hidden[h];
    logits[c] = a;
  }
  double top = logits[0];
  for (double v : logits) top = std::max(top, v);
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logits) v /= total;
  return logits;
}

struct GradCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences (step 1e-4) against the analytic gradient of
/// a random tiny double-precision model, over every parameter. Relative
/// error is |a - n| / max(|a|, |n|) with denominators below 1e-7 counted as
/// absolute error.
inline GradCheck gradient_check(std::uint64_t seed) {
  using namespace turngov;
  using namespace turngov::cnn;
  Rng rng(seed);
  CnnShape shape{.vocab = 7, .embed = 4, .filters = 3, .kernel = 2, .hidden = 5, .classes = 3};
  BasicCnnModel<double> model(shape, 0.0);
  model.initialize(seed);
  for (auto* t : model.tensors()) {
    for (auto& x : t->data) x += rng.uniform(-0.3, 0.3);
  }
  std::vector<LabeledSequence> batch;
  for (int i = 0; i < 3; ++i) {
    LabeledSequence ex;
    for (int l = 0; l < 5; ++l) ex.tokens.push_back(rng.uniform_index(shape.vocab));
    ex.label = rng.uniform_index(shape.classes);
    batch.push_back(ex);
  }
  BasicCnnModel<double> grads(shape, 0.0);
  loss_and_gradients<double>(model, batch, grads, false);

  const double h = 1e-4;
  GradCheck result;
  auto params = model.tensors();
  auto g = grads.tensors();
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k]->size(); ++i) {
      const double saved = params[k]->data[i];
      params[k]->data[i] = saved + h;
      const double up = evaluate_loss<double>(model, batch);
      params[k]->data[i] = saved - h;
      const double down = evaluate_loss<double>(model, batch);
      params[k]->data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = g[k]->data[i];
      const double denom = std::max(std::abs(numeric), std::abs(analytic));
      const double err = denom < 1e-7 ? std::abs(numeric - analytic)
                                      : std::abs(numeric - analytic) / denom;
      result.max_relative_error = std::max(result.max_relative_error, err);
      ++result.checked;
    }
  }
  return result;
}

/// Two-sided exact binomial p-value for b successes out of b + c at 1/2,
/// summed term by term.
inline double binomial_two_sided(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(b, c);
  double tail = 0.0;
  double term = std::pow(0.5, static_cast<double>(n));
  for (std::size_t i = 0; i <= k; ++i) {
    tail += term;
    term = term * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return std::min(1.0, 2.0 * tail);
}

}  // namespace oracles
