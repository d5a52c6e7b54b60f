// Command-line front end:
//
//   nestbo run --config FILE [--seed N] [--replicates R] [--jobs J] [--out-dir DIR]
//   nestbo sweep {scale|batch|step_size} [--seed N] [--replicates R] [--jobs J] [--out-dir DIR]
//   nestbo vpc --dim D [--lengthscale L] [--out-dir DIR]
//   nestbo verify [--seed N]
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
#pragma once

#include <ostream>

namespace nestbo {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nestbo
