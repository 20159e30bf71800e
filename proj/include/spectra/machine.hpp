#pragma once

// Minimal register-machine substrate. Programs are lists of four opcodes
// (INC / DECJZ / QRY / HALT) over unbounded natural registers; evaluation is
// step-indexed and budget exhaustion is an ordinary outcome, not an error.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spectra {

struct parse_error : std::runtime_error {
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by operations whose contract needs a total function when an
// evaluation budget runs out mid-computation.
struct budget_error : std::runtime_error {
  explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

enum class Opcode : uint8_t { Inc, DecJz, Qry, Halt };

struct Instruction {
  Opcode op;
  uint32_t reg = 0;
  uint32_t target = 0;  // DECJZ only: absolute instruction index
};

// Oracle-free program. The parser rejects QRY here; OracleProgram accepts it.
class Program {
 public:
  Program() = default;
  static Program parse(std::string_view text);
  static Program from_instructions(std::vector<Instruction> ins);

  const std::vector<Instruction>& instructions() const { return ins_; }
  std::string to_text() const;

 private:
  friend class OracleProgram;
  std::vector<Instruction> ins_;
};

class OracleProgram {
 public:
  OracleProgram() = default;
  static OracleProgram parse(std::string_view text);
  static OracleProgram from_instructions(std::vector<Instruction> ins);

  const std::vector<Instruction>& instructions() const { return ins_; }
  std::string to_text() const;

 private:
  std::vector<Instruction> ins_;
};

struct EvalResult {
  bool halted = false;
  uint64_t value = 0;     // valid when halted
  uint64_t steps = 0;     // steps consumed
};

struct OracleEvalResult {
  enum class Kind : uint8_t { Halted, Exhausted, OracleUnderflow };
  Kind kind = Kind::Exhausted;
  uint64_t value = 0;      // valid when Halted
  uint64_t use = 0;        // 1 + largest oracle position queried (0 if none)
  uint64_t position = 0;   // valid when OracleUnderflow: offending position
  uint64_t steps = 0;

  bool halted() const { return kind == Kind::Halted; }
};

// Run p on input x (placed in r0) for at most `budget` steps.
EvalResult evaluate(const Program& p, uint64_t x, uint64_t budget);

// As above with an oracle bit-prefix; QRY r replaces r's content with the
// oracle bit at position r. Queries beyond the prefix end the run.
OracleEvalResult evaluate_with_oracle(const OracleProgram& q, uint64_t x,
                                      std::span<const uint8_t> oracle,
                                      uint64_t budget);

// Stage-indexed c.e. set: W_s is finite, explicitly listed, monotone in s.
class CeSet {
 public:
  CeSet() = default;

  static CeSet empty();
  // W_s = { output of enum_prog on t : t <= s, halts within per_input_budget }.
  static CeSet from_program(Program enum_prog, uint64_t per_input_budget);
  // Explicit entry script: (element, stage) pairs.
  static CeSet from_schedule(std::vector<std::pair<uint64_t, uint64_t>> entries);
  // Toy halting set over a catalog: { i : catalog[i](i) halts within s steps }.
  static CeSet halting_set(std::vector<Program> catalog);

  // Sorted, duplicate-free listing of W_s.
  std::vector<uint64_t> at_stage(uint64_t s) const;
  bool contains(uint64_t e, uint64_t s) const;

 private:
  enum class Source : uint8_t { Empty, Prog, Schedule, Halting };
  Source source_ = Source::Empty;
  Program prog_;
  uint64_t per_input_budget_ = 0;
  std::vector<std::pair<uint64_t, uint64_t>> entries_;  // (element, stage)
  std::vector<Program> catalog_;
};

}  // namespace spectra
