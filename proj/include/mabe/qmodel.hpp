// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mabe/core_math.hpp"

namespace mabe {

/// Token 0 is the end-of-sequence token in every vocabulary.
inline constexpr Token kEos = 0;

/// (x, y_<t): the input sequence and the output prefix generated so far.
/// A non-owning view; the caller keeps both sequences alive.
struct DecisionContext {
  std::span<const Token> input;
  std::span<const Token> prefix;
};

enum class FamilyKind { kTabularNGram, kLinearFeatures, kOneHiddenLayer };

/// Model family and its dimensions.
///
/// Every family reads the same 2k context slots: the k input tokens of a
/// window aligned with the current output position t (x[t-k+1..t]) followed
/// by the last k prefix tokens. Slots that fall outside a sequence hold the
/// padding symbol, which is encoded as the value d.
struct ModelFamily {
  FamilyKind kind = FamilyKind::kTabularNGram;
  int context_order = 0;  // k
  int embed_dim = 0;      // OneHiddenLayer only
  int hidden_dim = 0;     // OneHiddenLayer only

  static ModelFamily tabular(int k) { return {FamilyKind::kTabularNGram, k, 0, 0}; }
  static ModelFamily linear(int k) { return {FamilyKind::kLinearFeatures, k, 0, 0}; }
  static ModelFamily one_hidden_layer(int embed, int hidden, int k) {
    return {FamilyKind::kOneHiddenLayer, k, embed, hidden};
  }

  bool operator==(const ModelFamily&) const = default;
};

std::string family_tag(FamilyKind kind);
FamilyKind family_from_tag(const std::string& tag);

/// Number of parameters implied by (family, d).
///
///   TabularNGram:   (d+1)^(2k) rows * d
///   LinearFeatures: d * (1 + 2k(d+1))          bias + one-hot slot features
///   OneHiddenLayer: (d+1)E + H*E(1+2k) + H + d*H + d
///                   embeddings, W1, b1, W2, b2
std::size_t param_count(const ModelFamily& family, int vocab_size);

/// Parametric Q-function. A value type: copying a model copies its weights.
class QModel {
 public:
  QModel(ModelFamily family, int vocab_size, std::uint64_t seed, std::vector<double> params);

  const ModelFamily& family() const noexcept { return family_; }
  int vocab_size() const noexcept { return vocab_size_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> mutable_params() noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

 private:
  ModelFamily family_;
  int vocab_size_;
  std::uint64_t seed_;
  std::vector<double> params_;
};

/// Gradient accumulator laid out like QModel::params().
struct GradientBuffer {
  std::vector<double> grads;

  GradientBuffer() = default;
  explicit GradientBuffer(std::size_t n) : grads(n, 0.0) {}
  explicit GradientBuffer(const QModel& model) : grads(model.size(), 0.0) {}

  GradientBuffer& operator+=(const GradientBuffer& other);
  void scale(double s);
  void clear();
};

/// Tabular models start at zero; the others draw uniform(-0.1, 0.1) from
/// CounterRng(seed, 0).
QModel init_model(const ModelFamily& family, int vocab_size, std::uint64_t seed);

QValues q_values(const QModel& model, const DecisionContext& ctx);

/// buf += sum_a g_a dQ_a(ctx; w)/dw.
void accumulate_gradient(const QModel& model, const DecisionContext& ctx,
                         const StepCoefficients& g, GradientBuffer& buf);

/// Central differences of `scalar_fn` with step h, one coordinate at a time.
/// The model's parameters are restored bit-exactly afterward.
std::vector<double> finite_difference_gradient(
    QModel& model, const std::function<double(const QModel&)>& scalar_fn, double h);

/// Row of a tabular model addressed by the context; for tests and toy models.
std::size_t tabular_row_index(const QModel& model, const DecisionContext& ctx);
void set_tabular_row(QModel& model, const DecisionContext& ctx, std::span<const double> row);

}  // namespace mabe
