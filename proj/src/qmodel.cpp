// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/qmodel.hpp"

#include <cmath>
#include <string>

#include "mabe/rng.hpp"

namespace mabe {
namespace {

constexpr std::size_t kMaxParams = std::size_t{1} << 26;

// Slot symbols for the 2k context slots (input window, then prefix tail).
// The padding symbol is d.
void context_slots(int d, int k, const DecisionContext& ctx, std::vector<int>& slots) {
  slots.assign(static_cast<std::size_t>(2 * k), d);
  const auto t = static_cast<long>(ctx.prefix.size());
  const auto xlen = static_cast<long>(ctx.input.size());
  for (int i = 0; i < k; ++i) {
    const long xpos = t - k + 1 + i;
    if (xpos >= 0 && xpos < xlen) slots[i] = ctx.input[xpos];
    const long ppos = t - k + i;
    if (ppos >= 0) slots[k + i] = ctx.prefix[ppos];
  }
}

void validate_context(int d, const DecisionContext& ctx) {
  for (std::size_t i = 0; i < ctx.input.size(); ++i) {
    if (ctx.input[i] < 0 || ctx.input[i] >= d) {
      throw InvalidArgument("input token " + std::to_string(ctx.input[i]) + " at position " +
                            std::to_string(i) + " out of range [0, " + std::to_string(d) + ")");
    }
  }
  for (std::size_t i = 0; i < ctx.prefix.size(); ++i) {
    if (ctx.prefix[i] <= kEos || ctx.prefix[i] >= d) {
      throw InvalidArgument("prefix token " + std::to_string(ctx.prefix[i]) + " at position " +
                            std::to_string(i) + " out of range [1, " + std::to_string(d) + ")");
    }
  }
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > kMaxParams) return kMaxParams + 1;
    r *= base;
  }
  return r;
}

// Parameter offsets of the one-hidden-layer family.
struct HiddenLayout {
  std::size_t d, e, h, din;
  std::size_t emb, w1, b1, w2, b2, total;

  HiddenLayout(const ModelFamily& f, int vocab)
      : d(vocab),
        e(f.embed_dim),
        h(f.hidden_dim),
        din(e * (1 + 2 * static_cast<std::size_t>(f.context_order))) {
    emb = 0;
    w1 = emb + (d + 1) * e;
    b1 = w1 + h * din;
    w2 = b1 + h;
    b2 = w2 + d * h;
    total = b2 + d;
  }
};

struct HiddenForward {
  std::vector<double> z;       // hidden-layer input
  std::vector<double> hidden;  // tanh activations
  std::vector<double> q;
};

HiddenForward hidden_forward(const QModel& m, const DecisionContext& ctx,
                             const std::vector<int>& slots) {
  const HiddenLayout L(m.family(), m.vocab_size());
  const auto w = m.params();
  HiddenForward f;
  f.z.assign(L.din, 0.0);
  if (!ctx.input.empty()) {
    for (Token tok : ctx.input) {
      for (std::size_t i = 0; i < L.e; ++i) f.z[i] += w[L.emb + tok * L.e + i];
    }
    const double inv = 1.0 / static_cast<double>(ctx.input.size());
    for (std::size_t i = 0; i < L.e; ++i) f.z[i] *= inv;
  }
  for (std::size_t s = 0; s < slots.size(); ++s) {
    for (std::size_t i = 0; i < L.e; ++i) {
      f.z[L.e * (s + 1) + i] = w[L.emb + slots[s] * L.e + i];
    }
  }
  f.hidden.resize(L.h);
  for (std::size_t j = 0; j < L.h; ++j) {
    double acc = w[L.b1 + j];
    const std::size_t row = L.w1 + j * L.din;
    for (std::size_t i = 0; i < L.din; ++i) acc += w[row + i] * f.z[i];
    f.hidden[j] = std::tanh(acc);
  }
  f.q.resize(L.d);
  for (std::size_t a = 0; a < L.d; ++a) {
    double acc = w[L.b2 + a];
    const std::size_t row = L.w2 + a * L.h;
    for (std::size_t j = 0; j < L.h; ++j) acc += w[row + j] * f.hidden[j];
    f.q[a] = acc;
  }
  return f;
}

std::size_t row_from_slots(int d, const std::vector<int>& slots) {
  std::size_t row = 0;
  std::size_t radix = 1;
  for (int s : slots) {
    row += static_cast<std::size_t>(s) * radix;
    radix *= static_cast<std::size_t>(d + 1);
  }
  return row;
}

void check_layout(const QModel& model, std::size_t n, const char* what) {
  if (n != model.size()) {
    throw InvalidArgument(std::string(what) + ": buffer has " + std::to_string(n) +
                          " entries, model has " + std::to_string(model.size()));
  }
}

}  // namespace

std::string family_tag(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kTabularNGram: return "tabular";
    case FamilyKind::kLinearFeatures: return "linear";
    case FamilyKind::kOneHiddenLayer: return "one_hidden_layer";
  }
  return "unknown";
}

FamilyKind family_from_tag(const std::string& tag) {
  if (tag == "tabular") return FamilyKind::kTabularNGram;
  if (tag == "linear") return FamilyKind::kLinearFeatures;
  if (tag == "one_hidden_layer") return FamilyKind::kOneHiddenLayer;
  throw InvalidArgument("unknown model family '" + tag +
                        "' (expected tabular, linear or one_hidden_layer)");
}

std::size_t param_count(const ModelFamily& f, int vocab_size) {
  if (vocab_size < 2) {
    throw InvalidArgument("vocab_size must be >= 2, got " + std::to_string(vocab_size));
  }
  if (f.context_order < 0) {
    throw InvalidArgument("context_order must be >= 0, got " + std::to_string(f.context_order));
  }
  const auto d = static_cast<std::size_t>(vocab_size);
  const auto k = static_cast<std::size_t>(f.context_order);
  std::size_t n = 0;
  switch (f.kind) {
    case FamilyKind::kTabularNGram: {
      const std::size_t rows = ipow(d + 1, 2 * f.context_order);
      n = rows > kMaxParams ? kMaxParams + 1 : rows * d;
      break;
    }
    case FamilyKind::kLinearFeatures:
      n = d * (1 + 2 * k * (d + 1));
      break;
    case FamilyKind::kOneHiddenLayer:
      if (f.embed_dim <= 0 || f.hidden_dim <= 0) {
        throw InvalidArgument("one_hidden_layer needs embed_dim > 0 and hidden_dim > 0");
      }
      n = HiddenLayout(f, vocab_size).total;
      break;
  }
  if (n > kMaxParams) {
    throw InvalidArgument("model family " + family_tag(f.kind) + " with d=" +
                          std::to_string(vocab_size) + ", k=" + std::to_string(f.context_order) +
                          " needs more than " + std::to_string(kMaxParams) + " parameters");
  }
  return n;
}

QModel::QModel(ModelFamily family, int vocab_size, std::uint64_t seed, std::vector<double> params)
    : family_(family), vocab_size_(vocab_size), seed_(seed), params_(std::move(params)) {
  const std::size_t expected = param_count(family_, vocab_size_);
  if (params_.size() != expected) {
    throw InvalidArgument("parameter vector has " + std::to_string(params_.size()) +
                          " entries, layout of " + family_tag(family_.kind) + " needs " +
                          std::to_string(expected));
  }
}

GradientBuffer& GradientBuffer::operator+=(const GradientBuffer& other) {
  if (other.grads.size() != grads.size()) {
    throw InvalidArgument("gradient buffers differ in length");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += other.grads[i];
  return *this;
}

void GradientBuffer::scale(double s) {
  for (double& g : grads) g *= s;
}

void GradientBuffer::clear() { std::fill(grads.begin(), grads.end(), 0.0); }

QModel init_model(const ModelFamily& family, int vocab_size, std::uint64_t seed) {
  std::vector<double> params(param_count(family, vocab_size), 0.0);
  if (family.kind != FamilyKind::kTabularNGram) {
    CounterRng rng(seed, 0);
    for (double& w : params) w = rng.uniform(-0.1, 0.1);
  }
  return QModel(family, vocab_size, seed, std::move(params));
}

QValues q_values(const QModel& model, const DecisionContext& ctx) {
  const int d = model.vocab_size();
  const int k = model.family().context_order;
  validate_context(d, ctx);
  std::vector<int> slots;
  context_slots(d, k, ctx, slots);
  const auto w = model.params();
  const auto ud = static_cast<std::size_t>(d);

  switch (model.family().kind) {
    case FamilyKind::kTabularNGram: {
      const std::size_t base = row_from_slots(d, slots) * ud;
      return QValues(std::vector<double>(w.begin() + base, w.begin() + base + ud));
    }
    case FamilyKind::kLinearFeatures: {
      const std::size_t nf = 1 + slots.size() * (ud + 1);
      std::vector<double> q(ud);
      for (std::size_t a = 0; a < ud; ++a) {
        const std::size_t row = a * nf;
        double acc = w[row];
        for (std::size_t s = 0; s < slots.size(); ++s) {
          acc += w[row + 1 + s * (ud + 1) + slots[s]];
        }
        q[a] = acc;
      }
      return QValues(std::move(q));
    }
    case FamilyKind::kOneHiddenLayer:
      return QValues(hidden_forward(model, ctx, slots).q);
  }
  throw InvalidArgument("unknown model family");
}

void accumulate_gradient(const QModel& model, const DecisionContext& ctx,
                         const StepCoefficients& g, GradientBuffer& buf) {
  const int d = model.vocab_size();
  const auto ud = static_cast<std::size_t>(d);
  check_layout(model, buf.grads.size(), "accumulate_gradient");
  if (g.size() != ud) {
    throw InvalidArgument("accumulate_gradient: coefficient vector has " +
                          std::to_string(g.size()) + " entries, vocabulary has " +
                          std::to_string(d));
  }
  validate_context(d, ctx);
  std::vector<int> slots;
  context_slots(d, model.family().context_order, ctx, slots);
  auto& out = buf.grads;

  switch (model.family().kind) {
    case FamilyKind::kTabularNGram: {
      const std::size_t base = row_from_slots(d, slots) * ud;
      for (std::size_t a = 0; a < ud; ++a) out[base + a] += g.g[a];
      return;
    }
    case FamilyKind::kLinearFeatures: {
      const std::size_t nf = 1 + slots.size() * (ud + 1);
      for (std::size_t a = 0; a < ud; ++a) {
        const std::size_t row = a * nf;
        out[row] += g.g[a];
        for (std::size_t s = 0; s < slots.size(); ++s) {
          out[row + 1 + s * (ud + 1) + slots[s]] += g.g[a];
        }
      }
      return;
    }
    case FamilyKind::kOneHiddenLayer: {
      const HiddenLayout L(model.family(), d);
      const auto w = model.params();
      const HiddenForward f = hidden_forward(model, ctx, slots);
      std::vector<double> dpre(L.h, 0.0);
      for (std::size_t a = 0; a < L.d; ++a) {
        out[L.b2 + a] += g.g[a];
        const std::size_t row = L.w2 + a * L.h;
        for (std::size_t j = 0; j < L.h; ++j) {
          out[row + j] += g.g[a] * f.hidden[j];
          dpre[j] += g.g[a] * w[row + j];
        }
      }
      std::vector<double> dz(L.din, 0.0);
      for (std::size_t j = 0; j < L.h; ++j) {
        dpre[j] *= 1.0 - f.hidden[j] * f.hidden[j];
        out[L.b1 + j] += dpre[j];
        const std::size_t row = L.w1 + j * L.din;
        for (std::size_t i = 0; i < L.din; ++i) {
          out[row + i] += dpre[j] * f.z[i];
          dz[i] += dpre[j] * w[row + i];
        }
      }
      if (!ctx.input.empty()) {
        const double inv = 1.0 / static_cast<double>(ctx.input.size());
        for (Token tok : ctx.input) {
          for (std::size_t i = 0; i < L.e; ++i) out[L.emb + tok * L.e + i] += dz[i] * inv;
        }
      }
      for (std::size_t s = 0; s < slots.size(); ++s) {
        for (std::size_t i = 0; i < L.e; ++i) {
          out[L.emb + slots[s] * L.e + i] += dz[L.e * (s + 1) + i];
        }
      }
      return;
    }
  }
}

std::vector<double> finite_difference_gradient(
    QModel& model, const std::function<double(const QModel&)>& scalar_fn, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be > 0");
  auto w = model.mutable_params();
  std::vector<double> grad(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double saved = w[j];
    w[j] = saved + h;
    const double up = scalar_fn(model);
    w[j] = saved - h;
    const double down = scalar_fn(model);
    w[j] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("finite_difference_gradient: non-finite objective at coordinate " +
                           std::to_string(j));
    }
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::size_t tabular_row_index(const QModel& model, const DecisionContext& ctx) {
  if (model.family().kind != FamilyKind::kTabularNGram) {
    throw InvalidArgument("tabular_row_index needs a tabular model");
  }
  validate_context(model.vocab_size(), ctx);
  std::vector<int> slots;
  context_slots(model.vocab_size(), model.family().context_order, ctx, slots);
  return row_from_slots(model.vocab_size(), slots);
}

void set_tabular_row(QModel& model, const DecisionContext& ctx, std::span<const double> row) {
  const auto d = static_cast<std::size_t>(model.vocab_size());
  if (row.size() != d) throw InvalidArgument("set_tabular_row: row length must equal d");
  const std::size_t base = tabular_row_index(model, ctx) * d;
  auto w = model.mutable_params();
  for (std::size_t a = 0; a < d; ++a) w[base + a] = row[a];
}

}  // namespace mabe
