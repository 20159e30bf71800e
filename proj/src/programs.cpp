#include "spectra/programs.hpp"

#include <stdexcept>

namespace spectra {
namespace {

Instruction inc(uint32_t r) { return {Opcode::Inc, r, 0}; }
Instruction decjz(uint32_t r, uint32_t t) { return {Opcode::DecJz, r, t}; }
Instruction qry(uint32_t r) { return {Opcode::Qry, r, 0}; }
Instruction halt(uint32_t r) { return {Opcode::Halt, r, 0}; }

}  // namespace

Program prog_const(uint64_t k) {
  std::vector<Instruction> ins;
  for (uint64_t i = 0; i < k; ++i) ins.push_back(inc(1));
  ins.push_back(halt(1));
  return Program::from_instructions(std::move(ins));
}

Program prog_identity() { return Program::from_instructions({halt(0)}); }

Program prog_successor() { return Program::from_instructions({inc(0), halt(0)}); }

Program prog_diverge() { return Program::from_instructions({decjz(1, 0)}); }

Program prog_delayed_const(uint64_t delay, uint64_t k) {
  std::vector<Instruction> ins;
  for (uint64_t i = 0; i < delay; ++i) ins.push_back(inc(2));
  for (uint64_t i = 0; i < k; ++i) ins.push_back(inc(1));
  ins.push_back(halt(1));
  return Program::from_instructions(std::move(ins));
}

Program prog_parity() {
  return Program::from_instructions({
      decjz(0, 3),  // r0 == 0 -> even
      decjz(0, 4),  // r0 == 0 after odd count -> odd
      decjz(9, 0),  // r9 stays 0: loop
      halt(1),      // even: 0
      inc(1),
      halt(1),      // odd: 1
  });
}

Program prog_table(const std::vector<uint64_t>& table, int64_t tail_shift) {
  const uint64_t b = table.size();
  if (int64_t(b) + tail_shift < 0) throw std::invalid_argument("prog_table: negative tail");
  const uint64_t tail_incs = uint64_t(int64_t(b) + tail_shift);
  std::vector<Instruction> ins;
  // Per-entry return blocks live after the tail block; compute their bases.
  std::vector<uint32_t> ret_base(b);
  uint64_t base = b + tail_incs + 1;  // checks, then tail (INCs + HALT)
  for (uint64_t k = 0; k < b; ++k) {
    ret_base[k] = uint32_t(base);
    base += table[k] + 1;
  }
  for (uint64_t k = 0; k < b; ++k) ins.push_back(decjz(0, ret_base[k]));
  for (uint64_t i = 0; i < tail_incs; ++i) ins.push_back(inc(0));
  ins.push_back(halt(0));  // x >= b: r0 holds x - b, now x + shift
  for (uint64_t k = 0; k < b; ++k) {
    for (uint64_t i = 0; i < table[k]; ++i) ins.push_back(inc(1));
    ins.push_back(halt(1));
  }
  return Program::from_instructions(std::move(ins));
}

OracleProgram oprog_query_at(uint64_t position) {
  std::vector<Instruction> ins;
  for (uint64_t i = 0; i < position; ++i) ins.push_back(inc(1));
  ins.push_back(qry(1));
  ins.push_back(halt(1));
  return OracleProgram::from_instructions(std::move(ins));
}

OracleProgram oprog_query_if_input(uint64_t match, uint64_t position) {
  std::vector<Instruction> ins;
  const uint32_t zero_at = uint32_t(match + 1);
  const uint32_t then_at = uint32_t(match + 2);
  for (uint64_t k = 0; k < match; ++k) ins.push_back(decjz(0, zero_at));
  ins.push_back(decjz(0, then_at));
  ins.push_back(halt(2));  // input != match: 0
  for (uint64_t i = 0; i < position; ++i) ins.push_back(inc(1));
  ins.push_back(qry(1));
  ins.push_back(halt(1));
  return OracleProgram::from_instructions(std::move(ins));
}

}  // namespace spectra
