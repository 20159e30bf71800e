#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "spectra/blocks.hpp"
#include "spectra/programs.hpp"

using namespace spectra;

namespace {

// f(i) = i+1 mod k on [0,k): a single k-cycle, which is a genuine block.
FiniteStructure cycle(uint64_t k) {
  std::vector<uint64_t> v(k);
  for (uint64_t i = 0; i + 1 < k; ++i) v[i] = i + 1;
  v[k - 1] = 0;
  return FiniteStructure(v);
}

const char* kSeedSpec =
    "type 0 fvals=0\n"
    "type 1 fvals=1,0\n"
    "emit 0 x1\n"
    "emit 1 x1\n";  // f = 0,2,1

}  // namespace

TEST_CASE("block spec: parse, evaluate, round-trip") {
  BlockSpec s = BlockSpec::parse(kSeedSpec);
  CHECK(s.header_length() == 3);
  CHECK_FALSE(s.has_tail());
  CHECK(s.value(0) == 0);
  CHECK(s.value(1) == 2);
  CHECK(s.value(2) == 1);
  CHECK(s.cp(0) == 1);
  CHECK(s.cp(1) == 1);
  CHECK(s.cp(2) == 1);
  CHECK(s.block_at(0).interval == Interval{0, 0});
  CHECK(s.block_at(2).interval == Interval{1, 2});
  CHECK_THROWS_AS(s.value(3), std::out_of_range);

  BlockSpec again = BlockSpec::parse(s.to_text());
  CHECK(again.to_text() == s.to_text());
  for (uint64_t x = 0; x < 3; ++x) CHECK(again.value(x) == s.value(x));
}

TEST_CASE("block spec: repeating tail") {
  BlockSpec s = BlockSpec::parse(
      "type 0 fvals=1,2,0\n"
      "type 1 fvals=1,0\n"
      "emit 0 x1\n"
      "tail 1\n");
  CHECK(s.header_length() == 3);
  CHECK(s.tail_length() == 2);
  CHECK(s.has_tail());
  // tail: 2-cycles at 3,5,7,...
  CHECK(s.value(3) == 4);
  CHECK(s.value(4) == 3);
  CHECK(s.value(101) == 102);
  CHECK(s.value(102) == 101);
  CHECK(s.cp(1000) == 1);
  CHECK(s.block_at(7).interval == Interval{7, 8});
  BlockSpec rt = BlockSpec::parse(s.to_text());
  CHECK(rt.to_text() == s.to_text());
  CHECK(rt.value(41) == s.value(41));
}

TEST_CASE("block spec: parse rejections") {
  CHECK_THROWS_AS(BlockSpec::parse(""), parse_error);
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=0\n"), parse_error);  // emits nothing
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=2,0\nemit 0 x1\n"), parse_error);  // escapes
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=0\ntype 0 fvals=0\nemit 0 x1\n"), parse_error);
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=0\nemit 1 x1\n"), parse_error);  // unknown id
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=0\nemit 0 x0\n"), parse_error);  // zero count
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=0\nemit 0 x1\ntail 3\n"), parse_error);
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=0\nemit 0 x1\ntail 0\ntail 0\n"), parse_error);
  CHECK_THROWS_AS(BlockSpec::parse("blob\n"), parse_error);
  CHECK_THROWS_AS(BlockSpec::parse("type 0 fvals=0 junk\nemit 0 x1\n"), parse_error);
}

TEST_CASE("block function sources agree") {
  BlockSpec s = BlockSpec::parse(kSeedSpec);
  BlockFunction by_spec = BlockFunction::from_spec(s);
  BlockFunction by_vals = BlockFunction::from_values({0, 2, 1});
  BlockFunction by_prog = BlockFunction::from_program(prog_table({0, 2, 1}, 0), 10000);
  for (uint64_t x = 0; x < 3; ++x) {
    CHECK(by_spec.value(x) == by_vals.value(x));
    CHECK(by_spec.value(x) == by_prog.value(x));
  }
  CHECK(by_spec.defined_length() == 3);
  CHECK(by_vals.defined_length() == 3);
  CHECK(by_prog.defined_length() == UINT64_MAX);
  CHECK_FALSE(by_vals.value(3).has_value());
  // starved program: value comes back empty rather than wrong
  BlockFunction starved = BlockFunction::from_program(prog_delayed_const(1000, 0), 10);
  CHECK_FALSE(starved.value(0).has_value());
}

TEST_CASE("cp oracles agree across sources") {
  BlockSpec s = BlockSpec::parse(
      "type 0 fvals=0\n"
      "type 1 fvals=1,0\n"
      "type 2 fvals=1,2,0\n"
      "emit 0 x2\n"
      "emit 2 x1\n"
      "emit 1 x3\n");
  BlockFunction f = BlockFunction::from_spec(s);
  CpOracle ground = CpOracle::from_spec(s);
  CpOracle brute = CpOracle::brute_force(f, s.header_length());
  for (uint64_t x = 0; x < s.header_length(); ++x) {
    REQUIRE(ground.query(x).has_value());
    CHECK(*ground.query(x) == cp_bounded(f, x, s.header_length()));
    CHECK(*ground.query(x) == *brute.query(x));
  }
  // program-backed cp: every point of the seed has exactly one preimage
  CpOracle prog = CpOracle::from_program(prog_const(1), 1000);
  CHECK(*prog.query(2) == 1);
  CpOracle starved = CpOracle::from_program(prog_diverge(), 50);
  CHECK_FALSE(starved.query(0).has_value());
}

TEST_CASE("preimage closure pulls in the whole cycle") {
  // blocks: [0,3] 4-cycle, [4,6] 3-cycle, [7,7] fixpoint
  BlockFunction f = BlockFunction::from_values({1, 2, 3, 0, 5, 6, 4, 7});
  CpOracle cp = CpOracle::brute_force(f, 8);
  PreimageClosureResult r = preimage_closure(f, cp, 5, 10000);
  REQUIRE_FALSE(r.exhausted);
  CHECK(r.set == std::vector<uint64_t>{4, 5, 6});  // oracle: orbit of 5
  PreimageClosureResult fix = preimage_closure(f, cp, 7, 10000);
  CHECK(fix.set == std::vector<uint64_t>{7});
  PreimageClosureResult starved = preimage_closure(f, cp, 0, 2);
  CHECK(starved.exhausted);
}

TEST_CASE("find_block on the seed") {
  BlockFunction f = BlockFunction::from_values({0, 2, 1});
  CpOracle cp = CpOracle::brute_force(f, 3);
  FindBlockResult r = find_block(f, cp, 2, 10000);
  REQUIRE(r.kind == FindBlockResult::Kind::Ok);
  CHECK(r.block.interval == Interval{1, 2});            // oracle: the 2-cycle
  CHECK(r.block.shape.fvals == std::vector<uint64_t>{1, 0});
  FindBlockResult r0 = find_block(f, cp, 0, 10000);
  REQUIRE(r0.kind == FindBlockResult::Kind::Ok);
  CHECK(r0.block.interval == Interval{0, 0});
}

TEST_CASE("find_block normalizes to the leftmost closure element") {
  // f = 2,1,0: one block [0,2] with components {0,2} and {1}
  BlockFunction f = BlockFunction::from_values({2, 1, 0, 3});
  CpOracle cp = CpOracle::brute_force(f, 4);
  for (uint64_t x = 0; x < 3; ++x) {
    FindBlockResult r = find_block(f, cp, x, 10000);
    REQUIRE(r.kind == FindBlockResult::Kind::Ok);
    CHECK(r.block.interval == Interval{0, 2});  // oracle: gap fill pulls in 1
    CHECK(r.block.shape.fvals == std::vector<uint64_t>{2, 1, 0});
  }
}

TEST_CASE("find_block agrees with spec ground truth across a layout") {
  BlockSpec s = BlockSpec::make({cycle(1), cycle(2), cycle(3), cycle(5)},
                                {{3, 1}, {0, 2}, {2, 1}, {1, 3}}, {1});
  BlockFunction f = BlockFunction::from_spec(s);
  CpOracle cp = CpOracle::from_spec(s);
  for (uint64_t x = 0; x < s.header_length() + 6; ++x) {
    FindBlockResult r = find_block(f, cp, x, 100000);
    REQUIRE(r.kind == FindBlockResult::Kind::Ok);
    Block truth = s.block_at(x);
    CHECK(r.block.interval.lo == truth.interval.lo);
    CHECK(r.block.interval.hi == truth.interval.hi);
    CHECK(r.block.shape.fvals == truth.shape.fvals);
  }
}

TEST_CASE("find_block failure modes") {
  // f(x) = x+1 is not a block function anywhere: the closure grows forever.
  BlockFunction f = BlockFunction::from_program(prog_successor(), 10000);
  CpOracle cp = CpOracle::from_program(Program::parse("DECJZ r0 2\nINC r1\nHALT r1\n"), 10000);
  FindBlockResult r = find_block(f, cp, 0, 1u << 20, /*ceiling=*/64);
  CHECK(r.kind == FindBlockResult::Kind::NotABlock);
  FindBlockResult starved = find_block(f, cp, 0, /*budget=*/10, /*ceiling=*/64);
  CHECK(starved.kind == FindBlockResult::Kind::Exhausted);
}

TEST_CASE("decompose_prefix on the seed") {
  BlockFunction f = BlockFunction::from_values({0, 2, 1});
  DecomposeResult d = decompose_prefix(f, 3);
  REQUIRE(d.ok());
  REQUIRE(d.blocks.size() == 2);  // oracle: [0,0] and [1,2]
  CHECK(d.blocks[0].interval == Interval{0, 0});
  CHECK(d.blocks[1].interval == Interval{1, 2});
  CHECK(d.blocks[1].shape.fvals == std::vector<uint64_t>{1, 0});
}

TEST_CASE("decompose_prefix: identity gives singletons") {
  BlockFunction f = BlockFunction::from_program(prog_identity(), 1000);
  DecomposeResult d = decompose_prefix(f, 5);
  REQUIRE(d.ok());
  REQUIRE(d.blocks.size() == 5);
  for (uint64_t i = 0; i < 5; ++i) {
    CHECK(d.blocks[i].interval == Interval{i, i});
    CHECK(d.blocks[i].shape.fvals == std::vector<uint64_t>{0});
  }
}

TEST_CASE("decompose_prefix matches the emitting spec") {
  BlockSpec s = BlockSpec::make({cycle(2), cycle(3), cycle(1), cycle(4)},
                                {{1, 2}, {0, 1}, {2, 3}, {3, 1}, {0, 2}});
  BlockFunction f = BlockFunction::from_spec(s);
  DecomposeResult d = decompose_prefix(f, s.header_length());
  REQUIRE(d.ok());
  uint64_t x = 0;
  for (const Block& b : d.blocks) {
    Block truth = s.block_at(x);
    CHECK(b.interval.lo == truth.interval.lo);
    CHECK(b.interval.hi == truth.interval.hi);
    CHECK(b.shape.fvals == truth.shape.fvals);
    x = b.interval.hi + 1;
  }
  CHECK(x == s.header_length());
}

TEST_CASE("decompose_prefix failures carry the offending position") {
  BlockFunction esc = BlockFunction::from_program(prog_successor(), 1000);
  DecomposeResult d = decompose_prefix(esc, 4);
  REQUIRE_FALSE(d.ok());
  CHECK(d.failure->reason == DecomposeFailure::Reason::EscapesPrefix);
  CHECK(d.failure->position == 3);  // f(3) = 4 leaves [0,4)

  BlockFunction partial = BlockFunction::from_values({0, 2, 1});
  DecomposeResult u = decompose_prefix(partial, 6);
  REQUIRE_FALSE(u.ok());
  CHECK(u.failure->reason == DecomposeFailure::Reason::NoMinimalClosure);
  CHECK(u.failure->position == 3);  // f is undefined there
}

TEST_CASE("cp_bounded counts in-prefix preimages") {
  BlockFunction f = BlockFunction::from_values({1, 1, 1, 3});
  CHECK(cp_bounded(f, 1, 4) == 3);
  CHECK(cp_bounded(f, 0, 4) == 0);
  CHECK(cp_bounded(f, 3, 4) == 1);
  CHECK_THROWS_AS(cp_bounded(f, 0, 5), budget_error);
}

TEST_CASE("classify_prefix on the seed") {
  BlockFunction f = BlockFunction::from_values({0, 2, 1});
  PrefixClassification c = classify_prefix(f, 3);
  CHECK(c.block_on_prefix);
  CHECK(c.closed_initial_segment_lengths == std::vector<uint64_t>{1, 3});  // oracle
  CHECK(c.identity_exceptions == 2);
  CHECK(c.constant_exceptions == 2);  // best constant hits once
}

TEST_CASE("classify_prefix shapes") {
  BlockFunction id = BlockFunction::from_program(prog_identity(), 1000);
  PrefixClassification ci = classify_prefix(id, 64);
  CHECK(ci.identity_exceptions == 0);
  CHECK(ci.constant_exceptions == 63);
  CHECK(ci.block_on_prefix);
  CHECK(ci.closed_initial_segment_lengths.size() == 64);

  BlockFunction c7 = BlockFunction::from_program(prog_const(7), 1000);
  PrefixClassification cc = classify_prefix(c7, 64);
  CHECK(cc.constant_value == 7);
  CHECK(cc.constant_exceptions == 0);
  CHECK(cc.identity_exceptions == 63);  // only x=7 agrees
  CHECK(cc.block_on_prefix);            // in-prefix the whole window closes as one piece
  CHECK(cc.closed_initial_segment_lengths == std::vector<uint64_t>{64});

  BlockFunction esc = BlockFunction::from_program(prog_successor(), 1000);
  PrefixClassification ce = classify_prefix(esc, 16);
  CHECK_FALSE(ce.block_on_prefix);
  CHECK(ce.block_failure->reason == DecomposeFailure::Reason::EscapesPrefix);
  CHECK(ce.closed_initial_segment_lengths.empty());
}

TEST_CASE("constant function block structure") {
  // f = 7 on [0,16): [0,7] closes into one piece (0..7 all map to 7),
  // then 8,9,... each map back to 7, escaping their own suffix.
  BlockFunction c7 = BlockFunction::from_program(prog_const(7), 1000);
  DecomposeResult d = decompose_prefix(c7, 16);
  REQUIRE(d.ok());  // in-prefix the greedy still partitions
  CHECK(d.blocks.size() == 1);
  CHECK(d.blocks[0].interval == Interval{0, 15});
}

TEST_CASE("type catalog merges isomorphic shapes and rejects overlap") {
  BlockTypeCatalog cat;
  Block b1{{0, 1}, FiniteStructure({1, 0})};
  Block b2{{4, 5}, FiniteStructure({1, 0})};
  Block b3{{2, 2}, FiniteStructure({0})};
  CHECK(cat.update(b1) == 0);
  CHECK(cat.update(b2) == 0);  // isomorphic: same type id
  CHECK(cat.update(b3) == 1);
  CHECK(cat.entries().size() == 2);
  CHECK(cat.entries()[0].occurrences.size() == 2);
  Block overlap{{5, 6}, FiniteStructure({1, 0})};
  CHECK_THROWS_AS(cat.update(overlap), std::invalid_argument);
  Block repeat{{4, 5}, FiniteStructure({1, 0})};
  CHECK_THROWS_AS(cat.update(repeat), std::invalid_argument);  // repeats count as overlap
}

TEST_CASE("properties: decompose pieces tile the prefix and are closed") {
  std::vector<BlockSpec> specs = {
      BlockSpec::make({cycle(1)}, {{0, 12}}),
      BlockSpec::make({cycle(2), cycle(5)}, {{1, 1}, {0, 4}, {1, 1}}),
      BlockSpec::make({FiniteStructure({2, 1, 0}), cycle(1)}, {{0, 3}, {1, 2}, {0, 1}}),
      BlockSpec::make({cycle(3), cycle(4), cycle(2)}, {{2, 2}, {1, 1}, {0, 2}, {1, 2}}),
  };
  for (const BlockSpec& s : specs) {
    BlockFunction f = BlockFunction::from_spec(s);
    uint64_t n = s.header_length();
    DecomposeResult d = decompose_prefix(f, n);
    REQUIRE(d.ok());
    uint64_t expect = 0;
    for (const Block& b : d.blocks) {
      CHECK(b.interval.lo == expect);          // tiling, no gaps
      REQUIRE(b.interval.hi >= b.interval.lo);
      CHECK(b.shape.is_function_closed());     // each piece closed
      // piece values match f
      for (uint64_t x = b.interval.lo; x <= b.interval.hi; ++x)
        CHECK(*f.value(x) == b.shape.fvals[x - b.interval.lo] + b.interval.lo);
      expect = b.interval.hi + 1;
    }
    CHECK(expect == n);
    // cp within the prefix is consistent with the spec's own count
    for (uint64_t x = 0; x < n; ++x) CHECK(cp_bounded(f, x, n) == s.cp(x));
  }
}
