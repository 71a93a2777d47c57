// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mabe {
namespace {

using nlohmann::json;

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Typed access to one JSON object that remembers which keys were consumed so
// leftovers can be reported as unknown fields.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(where(), "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    out = convert<T>(j_.at(key), join_path(path_, key));
  }

  template <class T, class Fn>
  void get_list(const std::string& key, std::vector<T>& out, Fn&& fn) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    const json& arr = j_.at(key);
    const std::string p = join_path(path_, key);
    if (!arr.is_array()) throw ParseError(p, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(fn(arr[i], p + "[" + std::to_string(i) + "]"));
    }
  }

  void sub(const std::string& key, const std::function<void(Reader&)>& fn) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    Reader r(j_.at(key), join_path(path_, key));
    fn(r);
    r.finish();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ParseError(join_path(path_, key), "unknown field");
    }
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

  template <class T>
  static T convert(const json& v, const std::string& p) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ParseError(p, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ParseError(p, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ParseError(p, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ParseError(p, "expected a nonnegative integer");
      return v.get<T>();
    } else {
      static_assert(std::is_integral_v<T>);
      if (!v.is_number_integer()) throw ParseError(p, "expected an integer");
      return v.get<T>();
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class T>
T tagged(const json& v, const std::string& p, T (*from_tag)(const std::string&)) {
  const auto tag = Reader::convert<std::string>(v, p);
  try {
    return from_tag(tag);
  } catch (const InvalidArgument& e) {
    throw ParseError(p, e.what());
  }
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ParseError(path, what);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("config", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader r(root, "");

  r.sub("task", [&](Reader& t) {
    t.get("kind", c.task.kind);
    t.get("vocab_size", c.task.vocab_size);
    t.get_list("probs", c.task.probs,
               [](const json& v, const std::string& p) { return Reader::convert<double>(v, p); });
    t.get("length", c.task.length);
    t.get("eps", c.task.eps);
    t.get("input_length", c.task.input_length);
    t.get("phrases_per_token", c.task.phrases_per_token);
    t.get("max_phrase_len", c.task.max_phrase_len);
    t.get("truncation_prob", c.task.truncation_prob);
    t.get("table_seed", c.task.table_seed);
  });
  r.sub("model", [&](Reader& m) {
    m.get("family", c.model.family);
    m.get("context_order", c.model.context_order);
    m.get("embed_dim", c.model.embed_dim);
    m.get("hidden_dim", c.model.hidden_dim);
  });
  try {
    c.train.optimizer = default_optimizer(family_from_tag(c.model.family));
  } catch (const InvalidArgument& e) {
    throw ParseError("model.family", e.what());
  }
  r.sub("train", [&](Reader& t) {
    t.get("lambda", c.train.lambda);
    t.sub("optimizer", [&](Reader& o) {
      if (o.has("kind")) {
        std::string kind;
        o.get("kind", kind);
        c.train.optimizer.kind = tagged(json(kind), "train.optimizer.kind", optimizer_from_tag);
      }
      o.get("lr", c.train.optimizer.lr);
      o.get("momentum", c.train.optimizer.momentum);
      o.get("beta1", c.train.optimizer.beta1);
      o.get("beta2", c.train.optimizer.beta2);
      o.get("epsilon", c.train.optimizer.epsilon);
    });
    t.get("batch_size", c.train.batch_size);
    t.get("steps", c.train.steps);
    t.get("label_smoothing", c.train.label_smoothing);
    t.get("eval_every", c.train.eval_every);
    t.get("probe_size", c.train.probe_size);
    t.get("convergence_tol", c.train.convergence_tol);
    t.get("checkpoint_every", c.checkpoint_every);
  });
  r.sub("decode", [&](Reader& d) {
    d.get_list("rules", c.decode.rules, [](const json& v, const std::string& p) {
      return tagged(v, p, rule_from_tag);
    });
    d.get_list("scorers", c.decode.scorers, [](const json& v, const std::string& p) {
      return tagged(v, p, scorer_from_tag);
    });
    d.get_list("betas", c.decode.betas,
               [](const json& v, const std::string& p) { return Reader::convert<double>(v, p); });
    d.get_list("beams", c.decode.beams, [](const json& v, const std::string& p) {
      return Reader::convert<std::size_t>(v, p);
    });
    d.get("instances", c.decode.instances);
  });
  r.sub("eval", [&](Reader& e) {
    e.get("instances", c.eval.instances);
    if (e.has("similarity")) {
      std::string tag;
      e.get("similarity", tag);
      c.eval.similarity = tagged(json(tag), "eval.similarity", similarity_from_tag);
    }
  });
  r.sub("sweep", [&](Reader& s) {
    s.get_list("lambdas", c.sweep.lambdas,
               [](const json& v, const std::string& p) { return Reader::convert<double>(v, p); });
  });
  r.sub("theorem", [&](Reader& t) {
    t.get_list("targets", c.theorem.targets, [](const json& v, const std::string& p) {
      if (!v.is_array()) throw ParseError(p, "expected an array of probabilities");
      std::vector<double> row;
      for (std::size_t i = 0; i < v.size(); ++i) {
        row.push_back(Reader::convert<double>(v[i], p + "[" + std::to_string(i) + "]"));
      }
      return row;
    });
    t.get("random_instances", c.theorem.random_instances);
    t.get("max_d", c.theorem.max_d);
    t.get("lr", c.theorem.solver.lr);
    t.get("tol", c.theorem.solver.tol);
    t.get("max_steps", c.theorem.solver.max_steps);
    t.sub("landscape", [&](Reader& g) {
      g.get("lo", c.theorem.grid.lo);
      g.get("hi", c.theorem.grid.hi);
      g.get("step", c.theorem.grid.step);
    });
  });
  r.sub("gradcheck", [&](Reader& g) {
    g.get("h", c.gradcheck.h);
    g.get("batch_size", c.gradcheck.batch_size);
    g.get("tolerance", c.gradcheck.tolerance);
  });
  if (r.has("seed")) {
    std::uint64_t seed = 0;
    r.get("seed", seed);
    c.seed = seed;
  }
  if (r.has("out")) {
    std::string out;
    r.get("out", out);
    c.out = out;
  }
  if (r.has("checkpoint")) {
    std::string ckpt;
    r.get("checkpoint", ckpt);
    c.checkpoint = ckpt;
  }
  r.finish();
  if (c.seed) c.train.seed = *c.seed;
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("config", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
  try {
    make_task(c.task);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError("task", e.what());
  }
  const ModelFamily family = make_family(c.model);
  try {
    param_count(family, c.task.vocab_size);
  } catch (const Error& e) {
    throw ParseError("model", e.what());
  }
  validate(c.train);
  require(c.checkpoint_every >= 0, "train.checkpoint_every", "must be >= 0");
  require(!c.decode.rules.empty(), "decode.rules", "must not be empty");
  require(!c.decode.scorers.empty(), "decode.scorers", "must not be empty");
  for (std::size_t i = 0; i < c.decode.betas.size(); ++i) {
    require(c.decode.betas[i] >= 0.0, "decode.betas[" + std::to_string(i) + "]", "must be >= 0");
  }
  for (std::size_t i = 0; i < c.decode.beams.size(); ++i) {
    require(c.decode.beams[i] >= 1, "decode.beams[" + std::to_string(i) + "]", "must be >= 1");
  }
  require(c.decode.instances >= 1, "decode.instances", "must be >= 1");
  require(c.eval.instances >= 1, "eval.instances", "must be >= 1");
  require(!c.sweep.lambdas.empty(), "sweep.lambdas", "must not be empty");
  require(c.theorem.max_d >= 2 && c.theorem.max_d <= 64, "theorem.max_d",
          "must lie in [2, 64]");
  require(c.theorem.solver.lr > 0.0, "theorem.lr", "must be > 0");
  require(c.theorem.solver.tol > 0.0, "theorem.tol", "must be > 0");
  require(c.theorem.solver.max_steps > 0, "theorem.max_steps", "must be > 0");
  require(c.theorem.grid.step > 0.0 && c.theorem.grid.hi > c.theorem.grid.lo,
          "theorem.landscape", "needs lo < hi and step > 0");
  for (std::size_t i = 0; i < c.theorem.targets.size(); ++i) {
    const auto& t = c.theorem.targets[i];
    const std::string p = "theorem.targets[" + std::to_string(i) + "]";
    require(t.size() >= 2 && t.size() <= 64, p, "needs between 2 and 64 entries");
    double sum = 0.0;
    for (double v : t) {
      require(v >= 0.0, p, "probabilities must be >= 0");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-9, p, "probabilities must sum to 1");
  }
  require(c.gradcheck.h > 0.0, "gradcheck.h", "must be > 0");
  require(c.gradcheck.batch_size >= 1, "gradcheck.batch_size", "must be >= 1");
  require(c.gradcheck.tolerance > 0.0, "gradcheck.tolerance", "must be > 0");
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = {{"kind", c.task.kind},
               {"vocab_size", c.task.vocab_size},
               {"probs", c.task.probs},
               {"length", c.task.length},
               {"eps", c.task.eps},
               {"input_length", c.task.input_length},
               {"phrases_per_token", c.task.phrases_per_token},
               {"max_phrase_len", c.task.max_phrase_len},
               {"truncation_prob", c.task.truncation_prob},
               {"table_seed", c.task.table_seed}};
  j["model"] = {{"family", c.model.family},
                {"context_order", c.model.context_order},
                {"embed_dim", c.model.embed_dim},
                {"hidden_dim", c.model.hidden_dim}};
  const OptimizerSpec& o = c.train.optimizer;
  j["train"] = {{"lambda", c.train.lambda},
                {"optimizer",
                 {{"kind", optimizer_tag(o.kind)},
                  {"lr", o.lr},
                  {"momentum", o.momentum},
                  {"beta1", o.beta1},
                  {"beta2", o.beta2},
                  {"epsilon", o.epsilon}}},
                {"batch_size", c.train.batch_size},
                {"steps", c.train.steps},
                {"label_smoothing", c.train.label_smoothing},
                {"eval_every", c.train.eval_every},
                {"probe_size", c.train.probe_size},
                {"convergence_tol", c.train.convergence_tol},
                {"checkpoint_every", c.checkpoint_every}};
  json rules = json::array();
  for (RuleKind k : c.decode.rules) rules.push_back(rule_tag(k));
  json scorers = json::array();
  for (Scorer s : c.decode.scorers) scorers.push_back(scorer_tag(s));
  j["decode"] = {{"rules", rules},
                 {"scorers", scorers},
                 {"betas", c.decode.betas},
                 {"beams", c.decode.beams},
                 {"instances", c.decode.instances}};
  j["eval"] = {{"instances", c.eval.instances},
               {"similarity", similarity_tag(c.eval.similarity)}};
  j["sweep"] = {{"lambdas", c.sweep.lambdas}};
  j["theorem"] = {{"targets", c.theorem.targets},
                  {"random_instances", c.theorem.random_instances},
                  {"max_d", c.theorem.max_d},
                  {"lr", c.theorem.solver.lr},
                  {"tol", c.theorem.solver.tol},
                  {"max_steps", c.theorem.solver.max_steps},
                  {"landscape",
                   {{"lo", c.theorem.grid.lo},
                    {"hi", c.theorem.grid.hi},
                    {"step", c.theorem.grid.step}}}};
  j["gradcheck"] = {{"h", c.gradcheck.h},
                    {"batch_size", c.gradcheck.batch_size},
                    {"tolerance", c.gradcheck.tolerance}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.out) j["out"] = *c.out;
  if (c.checkpoint) j["checkpoint"] = *c.checkpoint;
  return j.dump(2) + "\n";
}

SyntheticTask make_task(const TaskConfig& t) {
  if (t.kind == "bandit") {
    if (t.probs.empty()) throw ParseError("task.probs", "required for a bandit task");
    return SyntheticTask(BanditSpec{t.vocab_size, t.probs});
  }
  if (t.kind == "noisy_copy") {
    return SyntheticTask(NoisyCopySpec{t.vocab_size, t.length, t.eps});
  }
  if (t.kind == "synonym") {
    return SyntheticTask(make_synonym_spec(t.vocab_size, t.input_length, t.phrases_per_token,
                                           t.max_phrase_len, t.truncation_prob, t.table_seed));
  }
  throw ParseError("task.kind", "unknown task '" + t.kind +
                                    "' (expected bandit, noisy_copy or synonym)");
}

ModelFamily make_family(const ModelConfig& m) {
  FamilyKind kind;
  try {
    kind = family_from_tag(m.family);
  } catch (const InvalidArgument& e) {
    throw ParseError("model.family", e.what());
  }
  require(m.context_order >= 0, "model.context_order", "must be >= 0");
  switch (kind) {
    case FamilyKind::kTabularNGram: return ModelFamily::tabular(m.context_order);
    case FamilyKind::kLinearFeatures: return ModelFamily::linear(m.context_order);
    case FamilyKind::kOneHiddenLayer:
      require(m.embed_dim >= 1, "model.embed_dim", "must be >= 1");
      require(m.hidden_dim >= 1, "model.hidden_dim", "must be >= 1");
      return ModelFamily::one_hidden_layer(m.embed_dim, m.hidden_dim, m.context_order);
  }
  throw ParseError("model.family", "unsupported family");
}

EvalSuite make_suite(const DecodeConfig& decode, Similarity similarity) {
  EvalSuite suite;
  suite.scorers = decode.scorers;
  suite.utility = {similarity, Aggregation::kAverage};
  for (RuleKind kind : decode.rules) {
    switch (kind) {
      case RuleKind::kSample:
        for (double beta : decode.betas) suite.rules.push_back({kind, beta, 1});
        break;
      case RuleKind::kBeam:
        for (std::size_t b : decode.beams) suite.rules.push_back({kind, 1.0, b});
        break;
      default:
        suite.rules.push_back({kind, 1.0, 1});
    }
  }
  return suite;
}

}  // namespace mabe
