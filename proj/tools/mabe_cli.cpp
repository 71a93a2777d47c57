// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "mabe/cli.hpp"

int main(int argc, char** argv) { return mabe::run_cli(argc, argv, std::cout, std::cerr); }
