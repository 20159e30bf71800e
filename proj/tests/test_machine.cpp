#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectra/machine.hpp"
#include "spectra/programs.hpp"

using namespace spectra;

TEST_CASE("successor program adds one") {
  Program p = prog_successor();
  EvalResult r = evaluate(p, 41, 1000);
  CHECK(r.halted);
  CHECK(r.value == 42);  // oracle: 41 + 1
  CHECK(r.steps <= 1000);
}

TEST_CASE("constant and identity programs") {
  CHECK(evaluate(prog_const(7), 123, 1000).value == 7);
  CHECK(evaluate(prog_const(0), 5, 1000).value == 0);
  for (uint64_t x : {0ull, 1ull, 9ull, 100ull}) {
    EvalResult r = evaluate(prog_identity(), x, 10000);
    CHECK(r.halted);
    CHECK(r.value == x);
  }
}

TEST_CASE("parity program") {
  for (uint64_t x = 0; x < 12; ++x) {
    EvalResult r = evaluate(prog_parity(), x, 10000);
    CHECK(r.halted);
    CHECK(r.value == x % 2);
  }
}

TEST_CASE("table program with shifted tail") {
  Program p = prog_table({5, 0, 5}, 2);
  CHECK(evaluate(p, 0, 10000).value == 5);
  CHECK(evaluate(p, 1, 10000).value == 0);
  CHECK(evaluate(p, 2, 10000).value == 5);
  CHECK(evaluate(p, 3, 10000).value == 5);   // 3 + 2
  CHECK(evaluate(p, 10, 10000).value == 12);
  Program id_tail = prog_table({9}, 0);
  CHECK(evaluate(id_tail, 0, 10000).value == 9);
  CHECK(evaluate(id_tail, 4, 10000).value == 4);
}

TEST_CASE("divergence exhausts any budget") {
  Program p = prog_diverge();
  for (uint64_t b : {1ull, 10ull, 1000ull}) {
    EvalResult r = evaluate(p, 0, b);
    CHECK_FALSE(r.halted);
    CHECK(r.steps == b);
  }
}

TEST_CASE("delayed constant halts only once the delay has passed") {
  Program p = prog_delayed_const(50, 3);
  EvalResult starved = evaluate(p, 0, 10);
  CHECK_FALSE(starved.halted);
  EvalResult fed = evaluate(p, 0, 10000);
  CHECK(fed.halted);
  CHECK(fed.value == 3);
  CHECK(fed.steps >= 50);
}

TEST_CASE("budget monotonicity: once halted, always the same answer") {
  std::vector<Program> ps = {prog_successor(), prog_parity(), prog_delayed_const(20, 4),
                             prog_table({3, 1, 4, 1, 5}, 1)};
  for (const Program& p : ps) {
    for (uint64_t x = 0; x < 8; ++x) {
      EvalResult lo = evaluate(p, x, 200);
      EvalResult hi = evaluate(p, x, 100000);
      if (lo.halted) {
        CHECK(hi.halted);
        CHECK(lo.value == hi.value);
        CHECK(lo.steps == hi.steps);
      }
    }
  }
}

TEST_CASE("off-end fall-through diverges rather than halting") {
  // No HALT: the pc walks past the last instruction.
  Program p = Program::parse("INC r1\n");
  EvalResult r = evaluate(p, 0, 100);
  CHECK_FALSE(r.halted);
  CHECK(r.steps < 100);  // divergence is detected, not budgeted out
  CHECK_FALSE(evaluate(Program(), 3, 100).halted);  // empty program
}

TEST_CASE("program parsing") {
  Program p = Program::parse("# add two\nINC r0\nINC r0\nHALT r0\n");
  CHECK(p.instructions().size() == 3);
  CHECK(evaluate(p, 4, 100).value == 6);

  CHECK_THROWS_AS(Program::parse("QRY r0\nHALT r0\n"), parse_error);  // oracle-free
  CHECK_THROWS_AS(Program::parse("NOP\n"), parse_error);
  CHECK_THROWS_AS(Program::parse("INC r256\nHALT r0\n"), parse_error);  // register cap
  CHECK_THROWS_AS(Program::parse("DECJZ r0 99\nHALT r0\n"), parse_error);  // dangling label
  CHECK_THROWS_AS(Program::parse("INC\n"), parse_error);
  CHECK_THROWS_AS(Program::parse("INC 0\nHALT 0\n"), parse_error);  // registers are spelled rN

  // round trip
  Program q = Program::parse(p.to_text());
  CHECK(q.to_text() == p.to_text());
  CHECK(evaluate(q, 4, 100).value == 6);
}

TEST_CASE("oracle parity probe: use counts the largest position plus one") {
  // Reads positions 0..3 and sums the bits mod 2.
  OracleProgram q = OracleProgram::parse(
      "QRY r1\n"              // 0: r1 <- bit 0
      "INC r2\n"              // 1: r2 = 1
      "QRY r2\n"              // 2: r2 <- bit 1
      "INC r3\nINC r3\n"     // 3,4: r3 = 2
      "QRY r3\n"              // 5: r3 <- bit 2
      "INC r4\nINC r4\nINC r4\n"  // 6-8: r4 = 3
      "QRY r4\n"              // 9: r4 <- bit 3
      "DECJZ r0 12\nDECJZ r5 10\n"          // 10,11: drain the ignored input
      "DECJZ r1 15\nINC r0\nDECJZ r5 12\n"  // 12-14: r0 += r1
      "DECJZ r2 18\nINC r0\nDECJZ r5 15\n"  // 15-17: r0 += r2
      "DECJZ r3 21\nINC r0\nDECJZ r5 18\n"  // 18-20: r0 += r3
      "DECJZ r4 24\nINC r0\nDECJZ r5 21\n"  // 21-23: r0 += r4
      "DECJZ r0 28\n"         // 24: even -> halt 0
      "DECJZ r0 27\n"         // 25: odd -> restore the 1
      "DECJZ r5 24\n"         // 26: loop, subtracting twos
      "INC r0\n"              // 27
      "HALT r0\n");           // 28
  std::vector<uint8_t> bits = {1, 1, 0, 1};
  OracleEvalResult r = evaluate_with_oracle(q, 0, bits, 100000);
  CHECK(r.halted());
  CHECK(r.value == 1);  // oracle: 1+1+0+1 = 3, odd
  CHECK(r.use == 4);    // largest position queried is 3

  // Shorter oracle: the probe runs off the prefix at position 1.
  std::vector<uint8_t> short_bits = {1};
  OracleEvalResult u = evaluate_with_oracle(q, 0, short_bits, 100000);
  CHECK(u.kind == OracleEvalResult::Kind::OracleUnderflow);
  CHECK(u.position == 1);
}

TEST_CASE("oracle probes from the builder library") {
  std::vector<uint8_t> bits = {0, 1, 1, 0, 1};
  for (uint64_t pos = 0; pos < bits.size(); ++pos) {
    OracleEvalResult r = evaluate_with_oracle(oprog_query_at(pos), 99, bits, 100000);
    CHECK(r.halted());
    CHECK(r.value == bits[pos]);
    CHECK(r.use == pos + 1);
  }
  OracleEvalResult hit = evaluate_with_oracle(oprog_query_if_input(3, 4), 3, bits, 100000);
  CHECK(hit.halted());
  CHECK(hit.value == bits[4]);
  CHECK(hit.use == 5);
  OracleEvalResult miss = evaluate_with_oracle(oprog_query_if_input(3, 4), 2, bits, 100000);
  CHECK(miss.halted());
  CHECK(miss.value == 0);
  CHECK(miss.use == 0);  // no query made
}

TEST_CASE("use soundness: answers depend only on the queried prefix") {
  OracleProgram q = OracleProgram::parse("QRY r0\nHALT r0\n");  // bit at position = input
  std::vector<uint8_t> a = {1, 0, 1, 1};
  std::vector<uint8_t> b = {1, 0, 1, 0};  // differ only at position 3
  for (uint64_t x = 0; x < 3; ++x) {
    OracleEvalResult ra = evaluate_with_oracle(q, x, a, 1000);
    OracleEvalResult rb = evaluate_with_oracle(q, x, b, 1000);
    CHECK(ra.halted());
    CHECK(ra.use == x + 1);
    CHECK(ra.value == rb.value);
  }
}

TEST_CASE("ce set stage semantics") {
  SUBCASE("empty") {
    CeSet w = CeSet::empty();
    CHECK(w.at_stage(100).empty());
    CHECK_FALSE(w.contains(0, 100));
  }
  SUBCASE("program enumerator collects halting outputs through stage s") {
    // enumerator(t) = t, so W_s = {0..s}
    CeSet w = CeSet::from_program(prog_identity(), 1000);
    std::vector<uint64_t> w3 = w.at_stage(3);
    CHECK(w3 == std::vector<uint64_t>{0, 1, 2, 3});
    CHECK(w.contains(2, 3));
    CHECK_FALSE(w.contains(4, 3));
  }
  SUBCASE("schedules enter at their stage and stay") {
    CeSet w = CeSet::from_schedule({{7, 2}, {3, 5}});
    CHECK_FALSE(w.contains(7, 1));
    CHECK(w.contains(7, 2));
    CHECK(w.contains(7, 9));
    CHECK_FALSE(w.contains(3, 4));
    CHECK(w.at_stage(5) == std::vector<uint64_t>{3, 7});
  }
  SUBCASE("monotone in the stage") {
    CeSet w = CeSet::from_program(prog_parity(), 1000);
    for (uint64_t s = 0; s < 6; ++s) {
      auto now = w.at_stage(s), next = w.at_stage(s + 1);
      for (uint64_t e : now) CHECK(std::count(next.begin(), next.end(), e) == 1);
    }
  }
  SUBCASE("toy halting set") {
    // 0: halts instantly; 1: diverges; 2: halts after ~60 steps.
    CeSet w = CeSet::halting_set({prog_const(0), prog_diverge(), prog_delayed_const(60, 1)});
    CHECK(w.contains(0, 5));
    CHECK_FALSE(w.contains(1, 1000));
    CHECK_FALSE(w.contains(2, 5));
    CHECK(w.contains(2, 1000));
    CHECK(w.at_stage(1000) == std::vector<uint64_t>{0, 2});
  }
}
