#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>

#include "spectra/copies.hpp"
#include "spectra/programs.hpp"

using namespace spectra;

namespace {

const char* kDelta2Host =
    "type 0 fvals=1,0\n"
    "type 1 fvals=0\n"
    "tail 0,1,1\n";  // 2-cycle, fixpoint, fixpoint, repeating forever

BlockFunction seed_f() { return BlockFunction::from_values({0, 2, 1}); }

}  // namespace

TEST_CASE("session: append, insert, lookups") {
  CopySession s;
  CHECK(s.append() == 0);
  CHECK(s.append() == 1);
  CHECK(s.append() == 2);
  CHECK(s.insert_before(1) == 3);  // order 0,3,1,2
  CHECK(s.elements() == std::vector<uint64_t>{0, 3, 1, 2});
  CHECK(s.element_at(1) == 3);
  CHECK(*s.position_of(2) == 3);
  CHECK(*s.position_of(3) == 1);
  CHECK_FALSE(s.position_of(9).has_value());
  CHECK(s.least_unused() == 4);
  s.append_named(7);
  CHECK(s.least_unused() == 4);
  s.insert_named_before(4, 0);
  CHECK(s.elements() == std::vector<uint64_t>{4, 0, 3, 1, 2, 7});
  CHECK(s.least_unused() == 5);
  CHECK_THROWS_AS(s.append_named(7), std::invalid_argument);  // name in use
  CHECK_THROWS_AS(s.insert_before(99), std::out_of_range);    // position beyond end
  uint64_t end = s.insert_before(s.size());                  // degenerate insert appends
  CHECK(s.element_at(s.size() - 1) == end);
}

TEST_CASE("session: event log replays bit-exactly") {
  CopySession s;
  s.append();
  s.append();
  s.insert_before(0);
  s.restrain("n", 1, 2);
  s.append_named(9);
  s.restrain("n.w0", 0, CopySession::kNoBound);
  s.insert_before(3);
  s.release("n");
  std::string log = s.log_text();

  CopySession r = CopySession::replay(log);
  CHECK(r.elements() == s.elements());
  CHECK(r.restraints() == s.restraints());
  CHECK(r.log_text() == log);  // replay of the replay is identical
  CHECK(r.event_count() == s.event_count());

  // prefix replay stops mid-history
  CopySession p = CopySession::replay_prefix(log, 3);
  CHECK(p.elements() == std::vector<uint64_t>{2, 0, 1});
  CHECK(p.restraints().empty());

  CHECK_THROWS_AS(CopySession::replay("append 0 junk\n"), parse_error);
  CHECK_THROWS_AS(CopySession::replay("insert 0 after 0\n"), parse_error);
  CHECK_THROWS_AS(CopySession::replay("frobnicate\n"), parse_error);
  // asking for more events than the log holds just replays all of it
  CHECK(CopySession::replay_prefix(log, 99).elements() == s.elements());
}

TEST_CASE("restraints: windows, shifts, ownership") {
  CopySession s;
  for (int i = 0; i < 8; ++i) s.append();
  s.restrain("a", 2, 5);
  CHECK_FALSE(s.would_violate(1));
  CHECK(s.would_violate(2));
  CHECK(s.would_violate(5));
  CHECK_FALSE(s.would_violate(6));
  CHECK_FALSE(s.would_violate(3, "a"));  // own restraint does not bind
  CHECK(s.would_violate(3, "b"));

  s.insert_before(0);  // wholly left: the window slides right
  CHECK(s.restraints()[0].lo == 3);
  CHECK(s.restraints()[0].hi == 6);
  s.insert_before(4);  // inside: the window widens
  CHECK(s.restraints()[0].lo == 3);
  CHECK(s.restraints()[0].hi == 7);
  s.insert_before(3);  // at lo: still counts as left of the guarded block
  CHECK(s.restraints()[0].lo == 4);
  CHECK(s.restraints()[0].hi == 8);
  s.insert_before(s.size());  // right of everything: no change
  CHECK(s.restraints()[0].lo == 4);
  CHECK(s.restraints()[0].hi == 8);

  s.restrain("b", 6, CopySession::kNoBound);
  CHECK(s.would_violate(1000, "a"));  // unbounded window
  s.insert_before(2);
  CHECK(s.restraints()[1].lo == 7);
  CHECK(s.restraints()[1].hi == CopySession::kNoBound);
  s.release("a");
  REQUIRE(s.restraints().size() == 1);
  CHECK(s.restraints()[0].owner == "b");
  CHECK_FALSE(s.would_violate(5));
}

TEST_CASE("builders: standard and scheduled copies") {
  CopySession std5 = standard_copy(5);
  CHECK(std5.elements() == std::vector<uint64_t>{0, 1, 2, 3, 4});

  // ops: append, append, insert before 1
  CopySession s = schedule_copy_ops({0, 0, 2});
  CHECK(s.elements() == std::vector<uint64_t>{0, 2, 1});

  // front inserts settle position 0 after stage 1
  CHECK_THROWS_AS(schedule_copy_ops({0, 0, 0, 0, 1}), structure_error);
  CHECK(schedule_copy_ops({0, 1, 0, 0}).elements() == std::vector<uint64_t>{1, 0, 2, 3});
  CHECK_THROWS_AS(schedule_copy_ops({5}), structure_error);  // insert beyond the end
}

TEST_CASE("schedule_copy runs its program per stage") {
  // table: stage 0 -> 0 (append), stage 1 -> 1 (insert before 0), stages 2+ -> 0
  Program sched = prog_table({0, 1, 0, 0}, 0);
  CopySession s = schedule_copy(sched, 4, 10000);
  CHECK(s.elements() == std::vector<uint64_t>{1, 0, 2, 3});
  CHECK_THROWS_AS(schedule_copy(prog_diverge(), 2, 100), budget_error);
  // illegal op from the program surfaces as structure_error
  Program late_front = prog_table({0, 0, 0, 1}, 0);
  CHECK_THROWS_AS(schedule_copy(late_front, 4, 10000), structure_error);
}

TEST_CASE("copy oracle completes a session lazily") {
  CopySession base = schedule_copy_ops({0, 1, 0});  // order 1,0,2
  CopyOracle o(base, seed_f());
  CHECK(o.base_size() == 3);
  CHECK(o.element_at(0) == 1);
  CHECK(o.element_at(1) == 0);
  CHECK(o.element_at(2) == 2);
  CHECK(o.element_at(3) == 3);   // least unused names appended forever
  CHECK(o.element_at(10) == 10);
  CHECK(o.position_of(7) == 7);
  CHECK(o.position_of(1) == 0);
  CHECK(o.less(1, 0));
  CHECK(o.less(0, 2));
  CHECK_FALSE(o.less(2, 1));
  CHECK(o.less(2, 5));

  // fimg reads f through positions: f = 0,2,1
  CHECK(o.fimg(1) == 1);  // pos 0, f(0)=0, element 1
  CHECK(o.fimg(0) == 2);  // pos 1, f(1)=2, element 2
  CHECK(o.fimg(2) == 0);  // pos 2, f(2)=1, element 0
  CHECK_THROWS_AS(o.fimg(3), budget_error);  // f undefined at position 3
}

TEST_CASE("query views charge budgets") {
  CopyOracle o(standard_copy(4), seed_f());
  LessFimgView v(o, 2);
  CHECK(v.less(0, 1));
  CHECK(v.fimg(1) == 2);
  CHECK(v.queries() == 2);
  CHECK_THROWS_AS(v.less(0, 2), budget_error);

  SuccView sv(o, 3);
  CHECK(sv.succ(0) == 1);
  CHECK(sv.succ(3) == 4);  // completion kicks in past the base
  CHECK(sv.succ(4) == 5);
  CHECK_THROWS_AS(sv.succ(0), budget_error);

  CHECK(succ_holds(o, 1, 2));
  CHECK_FALSE(succ_holds(o, 1, 3));
}

TEST_CASE("ce encoding: adjacency survives exactly off the set") {
  CeSet w = CeSet::from_schedule({{0, 1}, {1, 3}, {2, 1}, {9, 2}});
  uint64_t stages = 4;
  CeEncoding enc = ce_encoded_copy(w, stages);
  REQUIRE(enc.markers.size() == stages);
  BlockFunction f = BlockFunction::from_values({0});  // order-only checks
  CopyOracle o(enc.session, f);
  // 0 entered at 1 (markers live), 1 at 3, 2 at 1 before its markers exist
  // (spoiled later, once stage 3 appends them), 9 has no markers at all.
  CHECK_FALSE(succ_holds(o, enc.markers[0].first, enc.markers[0].second));
  CHECK_FALSE(succ_holds(o, enc.markers[1].first, enc.markers[1].second));
  CHECK_FALSE(succ_holds(o, enc.markers[2].first, enc.markers[2].second));
  CHECK(succ_holds(o, enc.markers[3].first, enc.markers[3].second));

  // monotone growth: one marker pair per stage plus one insert per entry
  CHECK(enc.session.size() == 2 * stages + 3);

  // determinism: rebuilding gives the identical event log
  CeEncoding again = ce_encoded_copy(w, stages);
  CHECK(again.session.log_text() == enc.session.log_text());
}

TEST_CASE("ce encoding from a toy halting set") {
  CeSet w = CeSet::halting_set({prog_const(0), prog_diverge(), prog_delayed_const(40, 1)});
  CeEncoding enc = ce_encoded_copy(w, 64);
  BlockFunction f = BlockFunction::from_values({0});
  CopyOracle o(enc.session, f);
  CHECK_FALSE(succ_holds(o, enc.markers[0].first, enc.markers[0].second));  // halts fast
  CHECK(succ_holds(o, enc.markers[1].first, enc.markers[1].second));        // diverges
  CHECK_FALSE(succ_holds(o, enc.markers[2].first, enc.markers[2].second));  // halts late
}

TEST_CASE("delta2 approximation scripts") {
  Delta2Approx a = Delta2Approx::parse(
      "approx 0 init=1 flips=2,5\n"
      "# comment line\n"
      "approx 1 init=0\n"
      "approx 2 init=0 flips=1\n");
  CHECK(a.domain() == 3);
  CHECK(a.at(0, 0) == 1);
  CHECK(a.at(0, 1) == 1);
  CHECK(a.at(0, 2) == 0);  // flip at stage 2 counts from stage 2 on
  CHECK(a.at(0, 4) == 0);
  CHECK(a.at(0, 5) == 1);
  CHECK(a.limit(0) == 1);
  CHECK(a.limit(1) == 0);
  CHECK(a.limit(2) == 1);
  CHECK(a.settle_stage() == 5);

  CHECK_THROWS_AS(Delta2Approx::parse("approx 0 init=2\n"), parse_error);
  CHECK_THROWS_AS(Delta2Approx::parse("approx 0 init=0 flips=3,3\n"), std::invalid_argument);
  CHECK_THROWS_AS(Delta2Approx::parse("approx 0 init=0 flips=5,2\n"), std::invalid_argument);
  CHECK_THROWS_AS(Delta2Approx::parse("approx 0 init=0 flips=0\n"), std::invalid_argument);
  CHECK_THROWS_AS(Delta2Approx::parse("approx 1 init=0\n"), parse_error);  // gap in domain
  CHECK_THROWS_AS(Delta2Approx::parse("approx 0 init=0\napprox 0 init=1\n"), parse_error);
  CHECK_THROWS_AS(Delta2Approx::parse("bogus\n"), parse_error);

  Delta2Approx s = Delta2Approx::scripted({{1, {3}}, {0, {}}});
  CHECK(s.at(0, 2) == 1);
  CHECK(s.at(0, 3) == 0);
  CHECK(s.limit(0) == 0);
  CHECK(s.settle_stage() == 3);
}

TEST_CASE("delta2 encoding decodes back to the limit") {
  BlockFunction f = BlockFunction::from_spec(BlockSpec::parse(kDelta2Host));
  Delta2Approx approx = Delta2Approx::scripted({
      {0, {2}},        // settles to 1
      {1, {1, 3}},     // flips twice, back to 1
      {0, {}},         // constant 0
      {1, {4}},        // settles to 0
  });
  uint64_t stages = approx.settle_stage() + 2;
  Delta2Encoding enc = delta2_encoded_copy(approx, f, stages);
  REQUIRE(enc.markers.size() == 4);
  for (uint64_t e = 0; e < 4; ++e) {
    CHECK(enc.markers[e].first == 4 * e);
    CHECK(enc.markers[e].second == 4 * e + 2);
    // marker pairs sit on adjacent positions
    uint64_t p = *enc.session.position_of(enc.markers[e].first);
    uint64_t q = *enc.session.position_of(enc.markers[e].second);
    CHECK(q == p + 1);
  }
  std::vector<int> bits = delta2_decode(enc, f);
  CHECK(bits == std::vector<int>{1, 1, 0, 0});

  // mid-run the copy tracks the current approximation instead
  Delta2Encoding early = delta2_encoded_copy(approx, f, 1);
  std::vector<int> early_bits = delta2_decode(early, f);
  for (uint64_t e = 0; e < 4; ++e) CHECK(early_bits[e] == approx.at(e, 1));

  // determinism
  Delta2Encoding again = delta2_encoded_copy(approx, f, stages);
  CHECK(again.session.log_text() == enc.session.log_text());
}

TEST_CASE("delta2 encoding needs a host offering both patterns") {
  // all 2-cycles: there is no adjacent fixed-point pair for a 0 bit
  BlockFunction cycles = BlockFunction::from_spec(
      BlockSpec::parse("type 0 fvals=1,0\ntail 0\n"));
  Delta2Approx zero = Delta2Approx::scripted({{0, {}}});
  CHECK_THROWS_AS(delta2_encoded_copy(zero, cycles, 2), structure_error);
}
