#pragma once

// Small assemblers for register-machine programs used as fixtures and by the
// notation layer: constants, identity/successor, delayed halts, divergence,
// finite lookup tables with an identity or shifted tail, and oracle probes.

#include <cstdint>
#include <vector>

#include "spectra/machine.hpp"

namespace spectra {

// HALT with constant k (ignores input).
Program prog_const(uint64_t k);
// Returns its input.
Program prog_identity();
// Returns input + 1.
Program prog_successor();
// Never halts.
Program prog_diverge();
// Burns ~delay steps, then returns k.
Program prog_delayed_const(uint64_t delay, uint64_t k);
// Returns input mod 2.
Program prog_parity();

// Finite lookup: input x < table.size() returns table[x]; larger inputs
// return x + tail_shift (tail_shift may be 0 for an identity tail).
Program prog_table(const std::vector<uint64_t>& table, int64_t tail_shift = 0);

// Oracle probe: ignores input, returns the oracle bit at `position`.
OracleProgram oprog_query_at(uint64_t position);
// If input == match, return the oracle bit at `position`, else return 0.
OracleProgram oprog_query_if_input(uint64_t match, uint64_t position);

}  // namespace spectra
