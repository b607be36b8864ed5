// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/cli.hpp"

int main(int argc, char** argv) { return commenotes::cli::run(argc, argv); }
