// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "recnas/cli.hpp"

int main(int argc, char** argv) { return recnas::run_cli(argc, argv, std::cout, std::cerr); }
