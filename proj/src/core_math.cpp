// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mabe {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_token(const QValues& q, Token y) {
  if (y < 0 || static_cast<std::size_t>(y) >= q.size()) {
    throw InvalidArgument("token " + std::to_string(y) + " out of range [0, " +
                          std::to_string(q.size()) + ")");
  }
}

}  // namespace

QValues::QValues(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw InvalidArgument("QValues needs at least 2 entries, got " +
                          std::to_string(values_.size()));
  }
  for (std::size_t a = 0; a < values_.size(); ++a) {
    if (!std::isfinite(values_[a])) {
      throw InvalidArgument("QValues entry " + std::to_string(a) + " is not finite (" +
                            std::to_string(values_[a]) + ")");
    }
  }
}

TokenDistribution TokenDistribution::from_probs(std::vector<double> probs) {
  TokenDistribution out;
  out.log_probs.resize(probs.size());
  for (std::size_t a = 0; a < probs.size(); ++a) {
    out.log_probs[a] = probs[a] > 0.0 ? std::log(probs[a]) : kNegInf;
  }
  out.probs = std::move(probs);
  return out;
}

double log_sum_exp(const QValues& q) {
  const double m = *std::max_element(q.begin(), q.end());
  double s = 0.0;
  for (double v : q) s += std::exp(v - m);
  return m + std::log(s);
}

TokenDistribution softmax(const QValues& q) {
  const std::size_t d = q.size();
  const double m = *std::max_element(q.begin(), q.end());
  TokenDistribution out;
  out.probs.resize(d);
  out.log_probs.resize(d);
  double s = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    out.probs[a] = std::exp(q[a] - m);
    s += out.probs[a];
  }
  const double log_s = std::log(s);
  for (std::size_t a = 0; a < d; ++a) {
    out.probs[a] /= s;
    out.log_probs[a] = (q[a] - m) - log_s;
  }
  return out;
}

double expected_q(const TokenDistribution& p, const QValues& q) {
  if (p.size() != q.size()) {
    throw InvalidArgument("expected_q: distribution has " + std::to_string(p.size()) +
                          " entries, QValues has " + std::to_string(q.size()));
  }
  double e = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) e += p.probs[a] * q[a];
  return e;
}

DualTransform dual_transform(const QValues& q) {
  const std::size_t d = q.size();
  const TokenDistribution p = softmax(q);
  const double eq = expected_q(p, q);

  DualTransform out;
  out.factors.resize(d);
  std::vector<double> clipped(d);
  double z = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    out.factors[a] = 1.0 + q[a] - eq;
    const double raw = p.probs[a] * out.factors[a];
    if (raw > 1.0) out.upper_clip_bound = true;
    clipped[a] = std::clamp(raw, 0.0, 1.0);
    z += clipped[a];
  }
  // The raw values sum to one, so at least one is positive and z > 0.
  for (double& c : clipped) c /= z;
  out.normalizer = z;
  out.dist = TokenDistribution::from_probs(std::move(clipped));
  return out;
}

TokenDistribution dual_distribution(const QValues& q) { return dual_transform(q).dist; }

StepCoefficients mle_coefficients(const QValues& q, Token y) {
  check_token(q, y);
  const TokenDistribution p = softmax(q);
  StepCoefficients out{std::vector<double>(q.size())};
  for (std::size_t a = 0; a < q.size(); ++a) {
    out.g[a] = (static_cast<Token>(a) == y ? 1.0 : 0.0) - p.probs[a];
  }
  return out;
}

StepCoefficients smoothed_mle_coefficients(const QValues& q, Token y, double smoothing) {
  check_token(q, y);
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw InvalidArgument("label smoothing must lie in [0, 1), got " + std::to_string(smoothing));
  }
  const TokenDistribution p = softmax(q);
  const double floor = smoothing / static_cast<double>(q.size());
  StepCoefficients out{std::vector<double>(q.size())};
  for (std::size_t a = 0; a < q.size(); ++a) {
    const double target = (static_cast<Token>(a) == y ? 1.0 - smoothing : 0.0) + floor;
    out.g[a] = target - p.probs[a];
  }
  return out;
}

StepCoefficients cov_coefficients(const QValues& q) {
  const TokenDistribution p = softmax(q);
  const double eq = expected_q(p, q);
  StepCoefficients out{std::vector<double>(q.size())};
  for (std::size_t a = 0; a < q.size(); ++a) out.g[a] = p.probs[a] * (q[a] - eq);
  return out;
}

StepCoefficients mabe_coefficients(const QValues& q, Token y, double lambda) {
  if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
  StepCoefficients out = mle_coefficients(q, y);
  const StepCoefficients cov = cov_coefficients(q);
  const double w = 1.0 - lambda;
  for (std::size_t a = 0; a < q.size(); ++a) out.g[a] -= w * cov.g[a];
  return out;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < v.size(); ++a) {
    if (v[a] > v[best]) best = a;
  }
  return best;
}

TokenDistribution temperature_rescale(const QValues& q, double beta) {
  if (!(beta >= 0.0)) {
    throw InvalidArgument("temperature must be >= 0, got " + std::to_string(beta));
  }
  if (beta == 0.0) {
    std::vector<double> one_hot(q.size(), 0.0);
    one_hot[argmax(q.values())] = 1.0;
    return TokenDistribution::from_probs(std::move(one_hot));
  }
  if (beta == 1.0) return softmax(q);
  std::vector<double> scaled(q.begin(), q.end());
  for (double& v : scaled) v /= beta;
  return softmax(QValues(std::move(scaled)));
}

TokenDistribution power_rescale(const TokenDistribution& p, double beta) {
  if (!(beta >= 0.0)) {
    throw InvalidArgument("temperature must be >= 0, got " + std::to_string(beta));
  }
  const std::size_t d = p.size();
  if (beta == 0.0) {
    std::vector<double> one_hot(d, 0.0);
    one_hot[argmax(p.probs)] = 1.0;
    return TokenDistribution::from_probs(std::move(one_hot));
  }
  if (beta == 1.0) return p;
  // Work from log-probabilities so small temperatures do not underflow.
  double m = kNegInf;
  for (double lp : p.log_probs) m = std::max(m, lp);
  std::vector<double> out(d, 0.0);
  double s = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    if (p.probs[a] > 0.0) {
      out[a] = std::exp((p.log_probs[a] - m) / beta);
      s += out[a];
    }
  }
  for (double& v : out) v /= s;
  return TokenDistribution::from_probs(std::move(out));
}

}  // namespace mabe
