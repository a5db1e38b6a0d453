// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return e2srs::cli::dispatch({argv + 1, argv + argc}); }
