// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/cli.hpp"

int main(int argc, char** argv) { return pedrisk::run_cli(argc, argv); }
