#pragma once

// Runnable priority constructions over the register-machine model.
//
// run_finite_injury builds a block function f defeating each catalog program
// as a would-be preimage-counting function, while a replication strategy
// keeps every block type that ever appears recurring forever.
//
// run_tree_construction drives the d.c.e.-style tree argument: nodes guess
// outcomes s < w'_{m_cap-1} < w_{m_cap-1} < ... < w'_0 < w_0, attack by
// inserting one element before a chosen block copy (flipping one bit of the
// fimg graph 0 -> 1), and repair by realigning the session onto a standard
// prefix (flipping it back). verify_stop_witness replays the event log and
// re-checks every arithmetic claim behind a stopped node.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectra/blocks.hpp"
#include "spectra/copies.hpp"
#include "spectra/machine.hpp"
#include "spectra/recovery.hpp"

namespace spectra {

// Cantor pairing <x,y> = (x+y)(x+y+1)/2 + y and its inverse.
uint64_t pair_code(uint64_t x, uint64_t y);
std::pair<uint64_t, uint64_t> unpair_code(uint64_t p);

// --- finite injury ----------------------------------------------------------

struct FiniteInjuryOptions {
  uint64_t stages = 200;
  uint64_t max_length = uint64_t(1) << 22;  // growth guard
};

struct FiniteInjuryReport {
  enum class Status : uint8_t { Idle, Waiting, ActedCp2, SettledCp1 };
  struct Requirement {
    Status status = Status::Idle;
    uint64_t witness = 0;     // cycle start (valid unless Idle)
    uint64_t cycle_len = 0;   // valid with witness
    uint64_t phi_value = 0;   // converged value (SettledCp1 / ActedCp2)
    uint64_t injuries = 0;
    uint64_t settled_stage = 0;  // stage of settle/action, 0 = none
  };

  std::vector<uint64_t> fvals;                // the constructed prefix of f
  std::vector<Requirement> requirements;      // one per catalog program
  std::vector<FiniteStructure> known_types;   // first-occurrence order
  std::vector<std::string> log;
  uint64_t stages_run = 0;
};

// Requirement P_i: the i-th catalog program is not x |-> cp_f(x). Each P_i
// appends a fresh cycle (one size larger than any block so far) and watches
// phi_i at the cycle start w_i with budget s. Convergence to 1 makes P_i
// append N with f(N) = w_i — cp(w_i) becomes 2 and every block between w_i
// and N merges into one; convergence to anything else is already defeat,
// since cp(w_i) = 1 is preserved. Lower-priority waiting requirements are
// re-initialized by an action. Each stage ends by appending two fresh
// adjacent copies of every known block type.
FiniteInjuryReport run_finite_injury(const std::vector<Program>& catalog,
                                     const FiniteInjuryOptions& opt = {});

// --- tree construction -------------------------------------------------------

// One requirement: the pair (Phi, Psi) does not witness W <=T Gamma_A with
// Psi inverting Phi on the coded pair. Phi reads the fimg-graph bit string
// (positions are pair codes), Psi reads the characteristic string of W.
struct TreeRequirement {
  OracleProgram phi;
  OracleProgram psi;
  CeSet w;
};

enum class PairRule : uint8_t {
  PreimageLeft,      // x_m sits just left of the D-element mapping onto D's start
  LeftmostMapsRight  // x_m is C's last element, y_m the image target of D's start
};

struct TreeOptions {
  uint64_t stages = 500;
  uint64_t m_cap = 2;  // attack slots per node
  PairRule pair_rule = PairRule::PreimageLeft;
  uint64_t session_cap = uint64_t(1) << 20;
  uint64_t boundary_scan_window = uint64_t(1) << 16;
};

struct SlotRecord {
  enum class State : uint8_t { ChooseBlocks, WatchZero, WatchOne, WaitXi, Done };
  uint64_t m = 0;
  State state = State::ChooseBlocks;

  // Step 2
  std::vector<uint64_t> c_names, d_names;
  uint64_t x_name = 0, y_name = 0, pair = 0;
  // Step 3 / 4
  uint64_t t1 = 0, s1 = 0;
  uint64_t marker_s1 = 0;           // event count before the insert
  uint64_t marker_post_insert = 0;  // event count after it
  // Step 5
  uint64_t t2 = 0, s2 = 0, marker_s2 = 0;
  // Step 7
  uint64_t marker_final = 0;
};

struct NodeRecord {
  std::string address;  // outcome labels from the root, '.'-joined
  std::string outcome;  // current outcome label
  bool stopped = false;
  uint64_t aligned_len = 0;  // session prefix standard at last repair
  std::vector<SlotRecord> slots;
};

struct ConstructionReport {
  CopySession session;
  std::vector<NodeRecord> nodes;  // instantiated nodes, path order first
  std::string current_path;       // outcome labels at the last stage
  std::vector<std::string> narration;
  uint64_t stages_run = 0;
};

ConstructionReport run_tree_construction(const BlockFunction& f,
                                         const std::vector<TreeRequirement>& reqs,
                                         const TreeOptions& opt = {});

// Replays the event log around a stopped slot and re-checks: bit(pair) = 0
// and Psi = 0 (use <= t1) before the insert; bit = 1 and Psi = 1 (use <= t2)
// after; some a < t1 entered W between s1 and s2; Phi's run on a over
// Gamma_{A,s1} (value 0, use v) still reads the same v bits in the final
// session, so Phi disagrees with W at a for good. failure names the first
// clause that breaks.
struct VerifyOutcome {
  bool ok = false;
  std::string failure;
};

VerifyOutcome verify_stop_witness(const std::string& log_text, const SlotRecord& slot,
                                  const TreeRequirement& req, const BlockFunction& f);

}  // namespace spectra
