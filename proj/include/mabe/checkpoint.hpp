// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>

#include "mabe/qmodel.hpp"
#include "mabe/tasks.hpp"

namespace mabe {

/// A saved model plus the training step it was taken at.
struct Checkpoint {
  QModel model;
  long step = 0;
};

// Line-oriented text format, one item per line:
//
//   mabe-checkpoint 1
//   family <tabular|linear|one_hidden_layer>
//   vocab_size <d>
//   context_order <k>
//   embed_dim <E>
//   hidden_dim <H>
//   seed <seed>
//   step <step>
//   param_count <n>
//   params
//   <n lines, %.17g>
//   end
void write_checkpoint(std::ostream& out, const QModel& model, long step);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const QModel& model, long step, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Rejects a model whose vocabulary differs from the task's.
void check_compatible(const QModel& model, const SyntheticTask& task);

}  // namespace mabe
