#pragma once

#include "bpinn/errors.hpp"
#include "bpinn/harness/io.hpp"

#include <exception>
#include <ostream>
#include <string>
#include <vector>

namespace bpinn::harness {

/// Process exit status for each failure category; 1 is an internal error.
int exit_code(ErrorKind kind);

/// {"status":"error","error":{"kind":...,"exit_code":...,"message":...}}
Json error_json(const std::exception& e);

/// Runs one subcommand (gen, analytic, map, train, infer, eval, report).
/// `args` excludes the program name. Writes a one-line status JSON to `out`
/// on success or to `err` on failure and returns the exit status.
int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bpinn::harness
