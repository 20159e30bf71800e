#pragma once

// Block machinery for unary functions on (omega, <). A block is a minimal
// f-closed interval whose left complement is f-closed; block functions are
// exactly the f whose every element sits inside one. Operations here either
// brute-force a prefix (decompose_prefix) or drive the on-line recovery loop
// from a preimage-counting oracle (find_block).

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "spectra/machine.hpp"
#include "spectra/structure.hpp"

namespace spectra {

struct Block {
  Interval interval;
  FiniteStructure shape;  // values rebased to interval.lo

  bool operator==(const Block&) const = default;
};

// Declarative block layout: named shapes plus an emit schedule. The induced
// f is a block function by construction. Parsed from line records
//   type <id> fvals=<comma list>
//   emit <type-id> x<count>
//   tail <comma list of type ids>   (optional, at most once, after its types)
// A tail repeats forever after the emitted header, making f total on omega.
class BlockSpec {
 public:
  struct Emit {
    uint64_t type_id;
    uint64_t count;
  };

  static BlockSpec parse(std::string_view text);
  static BlockSpec make(std::vector<FiniteStructure> types, std::vector<Emit> emits,
                        std::vector<uint64_t> tail_types = {});

  const std::vector<FiniteStructure>& types() const { return types_; }
  bool has_tail() const { return !tail_.empty(); }
  // Total emitted length, excluding any repeating tail.
  uint64_t header_length() const { return header_len_; }
  // Length of one tail period (0 without a tail).
  uint64_t tail_length() const { return tail_len_; }

  uint64_t value(uint64_t x) const;          // throws std::out_of_range beyond a tailless layout
  uint64_t cp(uint64_t x) const;             // exact preimage count (blocks are closed)
  Block block_at(uint64_t x) const;          // the emitted block containing x
  std::string to_text() const;

 private:
  std::vector<FiniteStructure> types_;
  std::vector<uint64_t> seq_;        // flattened emit sequence (type ids)
  std::vector<uint64_t> offsets_;    // start position of each emitted block
  uint64_t header_len_ = 0;
  std::vector<uint64_t> tail_;       // type ids repeated forever (may be empty)
  uint64_t tail_len_ = 0;
  std::vector<uint64_t> tail_offsets_;

  // locate the emitted block index/start covering x
  std::pair<uint64_t, uint64_t> locate(uint64_t x) const;  // (type_id, block_start)
};

// A unary function presented either declaratively (BlockSpec), extensionally
// (a finite value vector), or by a program evaluated under a step budget.
class BlockFunction {
 public:
  static BlockFunction from_spec(BlockSpec spec);
  static BlockFunction from_values(std::vector<uint64_t> values);
  static BlockFunction from_program(Program f, uint64_t eval_budget);

  // nullopt when x is beyond a finite layout or the program exhausts its budget.
  std::optional<uint64_t> value(uint64_t x) const;
  // UINT64_MAX when total on all of omega.
  uint64_t defined_length() const;

  const BlockSpec* spec() const { return std::get_if<BlockSpec>(&src_); }

 private:
  std::variant<BlockSpec, std::vector<uint64_t>, std::pair<Program, uint64_t>> src_;
};

// Answers cp_f(x) = card(f^{-1}(x)) exactly — condition (*) made concrete.
// Sources: ground truth from a BlockSpec, a program, or bounded brute force
// over a prefix known to contain x's whole block.
class CpOracle {
 public:
  static CpOracle from_spec(const BlockSpec& spec);
  static CpOracle from_program(Program cp, uint64_t eval_budget);
  static CpOracle brute_force(const BlockFunction& f, uint64_t n);

  std::optional<uint64_t> query(uint64_t x) const;

 private:
  struct Brute {
    const BlockFunction* f;
    uint64_t n;
  };
  std::variant<BlockSpec, std::pair<Program, uint64_t>, Brute> src_;
};

// --- operations ---------------------------------------------------------

struct PreimageClosureResult {
  bool exhausted = false;
  std::vector<uint64_t> set;  // sorted; meaningful when !exhausted
};

// Least superset of {x} closed under f-preimages, found by cp-guided upward
// scans. Budget counts f-evaluations and cp queries.
PreimageClosureResult preimage_closure(const BlockFunction& f, const CpOracle& cp,
                                       uint64_t x, uint64_t budget);

struct FindBlockResult {
  enum class Kind : uint8_t { Ok, Exhausted, NotABlock };
  Kind kind = Kind::Exhausted;
  Block block;  // valid when Ok
};

// On-line block recovery: preimage-close x, normalize to the leftmost
// element of the accumulated closure, then grow by gap fill / forward images
// until the union is an f-closed gap-free interval that is minimal with an
// f-closed left complement. `ceiling` caps the accumulated cardinality.
// Correctness presumes cp really answers cp_f; with an unreliable oracle the
// loop can only end in Exhausted or NotABlock, never a false block.
FindBlockResult find_block(const BlockFunction& f, const CpOracle& cp, uint64_t x,
                           uint64_t budget, uint64_t ceiling = uint64_t(1) << 16);

struct DecomposeFailure {
  enum class Reason : uint8_t { EscapesPrefix, NoMinimalClosure };
  Reason reason;
  uint64_t position;
};

struct DecomposeResult {
  std::vector<Block> blocks;                 // valid when !failure
  std::optional<DecomposeFailure> failure;
  bool ok() const { return !failure.has_value(); }
};

// Brute-force greedy decomposition of [0,n) into blocks; the verdict is about
// the prefix only (the final piece may extend beyond n in omega).
DecomposeResult decompose_prefix(const BlockFunction& f, uint64_t n);

// card { y < n : f(y) = x }. Requires f defined on [0,n).
uint64_t cp_bounded(const BlockFunction& f, uint64_t x, uint64_t n);

struct PrefixClassification {
  uint64_t constant_value = 0;        // best constant
  uint64_t constant_exceptions = 0;   // #{x<n : f(x) != constant_value}
  uint64_t identity_exceptions = 0;   // #{x<n : f(x) != x}
  bool block_on_prefix = false;
  std::optional<DecomposeFailure> block_failure;
  std::vector<uint64_t> closed_initial_segment_lengths;  // k with [0,k) f-closed in-prefix
};

PrefixClassification classify_prefix(const BlockFunction& f, uint64_t n);

// Catalog of block types seen so far with their occurrence intervals.
// update() merges modulo isomorphism and rejects overlapping occurrences.
class BlockTypeCatalog {
 public:
  struct Entry {
    FiniteStructure shape;
    std::vector<Interval> occurrences;
  };

  // Returns the type index; throws std::invalid_argument on overlap.
  uint64_t update(const Block& b);
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

}  // namespace spectra
