// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace mabe {
namespace {

constexpr const char* kMagic = "mabe-checkpoint 1";

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next(const char* expecting) {
    std::string line;
    if (!std::getline(in_, line)) fail(std::string("unexpected end of file, expected ") + expecting);
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Reads "<key> <value>" and returns the value text.
  std::string field(const std::string& key) {
    const std::string line = next(key.c_str());
    if (line.rfind(key + " ", 0) != 0) fail("expected field '" + key + "', got '" + line + "'");
    return line.substr(key.size() + 1);
  }

  template <class Int>
  Int integer(const std::string& key) {
    const std::string text = field(key);
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("field '" + key + "' is not an integer: '" + text + "'");
    }
    return v;
  }

  double real() {
    const std::string text = next("a parameter value");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("parameter is not a number: '" + text + "'");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("line " + std::to_string(line_no_), what);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const QModel& model, long step) {
  const ModelFamily& f = model.family();
  out << kMagic << '\n'
      << "family " << family_tag(f.kind) << '\n'
      << "vocab_size " << model.vocab_size() << '\n'
      << "context_order " << f.context_order << '\n'
      << "embed_dim " << f.embed_dim << '\n'
      << "hidden_dim " << f.hidden_dim << '\n'
      << "seed " << model.seed() << '\n'
      << "step " << step << '\n'
      << "param_count " << model.size() << '\n'
      << "params\n";
  for (double w : model.params()) out << fmt::format("{:.17g}\n", w);
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  LineReader r(in);
  if (r.next("header") != kMagic) r.fail(std::string("missing header '") + kMagic + "'");
  ModelFamily family;
  try {
    family.kind = family_from_tag(r.field("family"));
  } catch (const InvalidArgument& e) {
    r.fail(e.what());
  }
  const int d = r.integer<int>("vocab_size");
  family.context_order = r.integer<int>("context_order");
  family.embed_dim = r.integer<int>("embed_dim");
  family.hidden_dim = r.integer<int>("hidden_dim");
  const auto seed = r.integer<std::uint64_t>("seed");
  const long step = r.integer<long>("step");
  const auto n = r.integer<std::size_t>("param_count");
  std::size_t expected = 0;
  try {
    expected = param_count(family, d);
  } catch (const Error& e) {
    r.fail(e.what());
  }
  if (n != expected) {
    r.fail(fmt::format("param_count {} does not match the {} parameters of this family", n,
                       expected));
  }
  if (r.next("'params'") != "params") r.fail("expected 'params'");
  std::vector<double> params(n);
  for (double& w : params) w = r.real();
  if (r.next("'end'") != "end") r.fail("expected 'end' after the parameters");
  return Checkpoint{QModel(family, d, seed, std::move(params)), step};
}

void save_checkpoint(const QModel& model, long step, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_checkpoint(out, model, step);
  if (!out) throw Error("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  try {
    return read_checkpoint(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ":" + e.where(), e.detail());
  }
}

void check_compatible(const QModel& model, const SyntheticTask& task) {
  if (model.vocab_size() != task.vocab_size()) {
    throw InvalidArgument(fmt::format("checkpoint vocabulary size {} does not match task "
                                      "vocabulary size {}",
                                      model.vocab_size(), task.vocab_size()));
  }
}

}  // namespace mabe
