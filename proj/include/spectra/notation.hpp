#pragma once

// Notation systems for omega over the alphabet {a,b}. Strings are handled
// through their length-lex codes ("" = 0, "a" = 1, "b" = 2, "aa" = 3, ...);
// a system is a pair of programs: forward (value -> code of its notation)
// and backward (code -> value+1, or 0 off the notation set). The successor
// function alone pins a system down: shapiro_translate rebuilds the value
// assignment from the successor program and the bare notation set.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spectra/machine.hpp"

namespace spectra {

std::string code_to_string(uint64_t code);
uint64_t string_to_code(std::string_view s);  // parse_error on characters outside {a,b}

struct NotationBundle {
  Program forward;
  Program backward;
  uint64_t hint_n = 0;

  // Fixed section order:
  //   HINT n=<k>
  //   FORWARD   (program lines)
  //   BACKWARD  (program lines)
  static NotationBundle parse(std::string_view text);
  std::string to_text() const;
};

// The sigma-preimage of the standard strict order: does the value denoted by
// c1 precede the value denoted by c2? structure_error when either code is off
// the notation set, budget_error when `backward` runs out of steps.
bool preimage_less(const Program& backward, uint64_t c1, uint64_t c2, uint64_t budget);

struct CanonicalEnumeration {
  std::vector<uint64_t> codes;   // the first n notations in length-lex order
  std::vector<uint64_t> values;  // values[i] denoted by codes[i]
};

// Scan codes < horizon with `backward` (step budget per call), collecting the
// first n notations. The enumeration is canonical when those n notations
// denote exactly {0,...,n-1}; anything else raises structure-shaped errors:
// budget_error if the horizon/budget runs out, parse-free structure_error
// (from copies.hpp) if values repeat or escape the range.
CanonicalEnumeration canonical_enumeration(const Program& backward, uint64_t n,
                                           uint64_t horizon, uint64_t budget);

struct AcceptabilityVerdict {
  bool ok = false;
  std::optional<uint64_t> first_bad_value;  // least v with succ(code_of(v)) wrong
};

// Check succ(code of v) = code of v+1 for all v < n-1 against the bundle's
// value assignment.
AcceptabilityVerdict verify_acceptability(const CanonicalEnumeration& e, const Program& succ,
                                          uint64_t budget);

// Recover the value assignment from the successor program alone: the unique
// notation outside succ's image is 0, and iterating succ enumerates the rest.
// Returns codes indexed by value. structure_error when the generator is not
// unique or the successor chain leaves/repeats inside the set.
std::vector<uint64_t> shapiro_translate(const Program& succ,
                                        const std::vector<uint64_t>& notation_codes,
                                        uint64_t budget);

struct ClassifierVerdict {
  enum class FunctionShape : uint8_t { AlmostConstant, AlmostIdentity, Mixed };
  enum class SetShape : uint8_t { Finite, Cofinite, Balanced };

  FunctionShape shape = FunctionShape::Mixed;
  uint64_t constant_value = 0;  // winning constant when AlmostConstant
  uint64_t exceptions = 0;      // disagreements with the winning pattern
  bool is_characteristic = false;
  SetShape set_shape = SetShape::Balanced;  // meaningful when is_characteristic
};

// Threshold classifier at floor(n/4) exceptions: almost-constant wins ties
// over almost-identity; 0/1 data additionally gets a finite/cofinite call.
ClassifierVerdict everywhere_computable_classifier(const std::vector<uint64_t>& values);

}  // namespace spectra
