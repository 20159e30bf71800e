#pragma once

// Computable copies of (omega, <) built on-line. A CopySession is a growing
// finite linear order over natural-number names; the only mutations are
// appending, inserting before an existing position, and restraint
// bookkeeping, and every mutation is logged so a run can be replayed
// bit-exactly. A finished session extends to a full copy (CopyOracle) by
// lazily appending the least unused names forever.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spectra/blocks.hpp"
#include "spectra/machine.hpp"

namespace spectra {

struct structure_error : std::runtime_error {
  explicit structure_error(const std::string& what) : std::runtime_error(what) {}
};

struct Restraint {
  std::string owner;
  uint64_t lo;
  uint64_t hi;  // CopySession::kNoBound = unbounded

  bool operator==(const Restraint&) const = default;
};

class CopySession {
 public:
  static constexpr uint64_t kNoBound = UINT64_MAX;

  // Mutations. Named variants reject already-used names; the unnamed ones
  // pick the least unused name and return it. pos must be <= size() for
  // inserts (pos == size() degenerates to an append but logs as an insert).
  uint64_t append();
  void append_named(uint64_t name);
  uint64_t insert_before(uint64_t pos);
  void insert_named_before(uint64_t name, uint64_t pos);

  uint64_t size() const { return elements_.size(); }
  const std::vector<uint64_t>& elements() const { return elements_; }
  uint64_t element_at(uint64_t pos) const;
  std::optional<uint64_t> position_of(uint64_t name) const;
  uint64_t least_unused() const;

  // Restraints guard position intervals. Inserting at pos violates a
  // restraint [lo,hi] of another owner iff lo <= pos <= hi. Inserts shift
  // restraints: wholly to the right of pos they slide, covering pos they
  // widen. Violation checking is advisory — callers consult would_violate;
  // the session never refuses a mutation.
  void restrain(std::string owner, uint64_t lo, uint64_t hi);
  void release(const std::string& owner);
  bool would_violate(uint64_t pos, const std::string& owner = {}) const;
  const std::vector<Restraint>& restraints() const { return restraints_; }

  // Event log: one record per mutation, four kinds.
  //   append <name> | insert <name> before <pos> | restrain <owner> <lo> <hi|inf> | release <owner>
  std::string log_text() const;
  uint64_t event_count() const { return log_.size(); }
  static CopySession replay(std::string_view log_text);
  static CopySession replay_prefix(std::string_view log_text, uint64_t events);

 private:
  void use_name(uint64_t name);

  std::vector<uint64_t> elements_;                 // names by position
  std::unordered_map<uint64_t, uint64_t> pos_;     // name -> position
  std::unordered_map<uint64_t, bool> used_;
  mutable uint64_t unused_floor_ = 0;
  std::vector<Restraint> restraints_;
  std::vector<std::string> log_;
};

// A finished session completed to a copy of omega by appending the least
// unused names on demand, paired with the ambient block function f read
// through positions. Thread-safe for concurrent queries.
class CopyOracle {
 public:
  CopyOracle(CopySession base, BlockFunction f);

  uint64_t element_at(uint64_t pos) const;
  uint64_t position_of(uint64_t name) const;  // total: every name eventually appears
  bool less(uint64_t a, uint64_t b) const;
  // Element sitting at position f(position_of(a)); budget_error if f is not
  // defined there.
  uint64_t fimg(uint64_t a) const;

  const BlockFunction& f() const { return *f_; }
  uint64_t base_size() const { return base_size_; }

 private:
  void materialize_to(uint64_t pos) const;
  void materialize_name(uint64_t name) const;

  mutable std::mutex mu_;
  mutable std::vector<uint64_t> elems_;
  mutable std::unordered_map<uint64_t, uint64_t> pos_;
  mutable std::unordered_map<uint64_t, bool> used_;
  mutable uint64_t fresh_floor_ = 0;
  uint64_t base_size_ = 0;
  std::shared_ptr<const BlockFunction> f_;
};

// Query-counting facades: recovery procedures see the copy only through
// these, so their budgets meaningfully count oracle traffic.
class LessFimgView {
 public:
  explicit LessFimgView(const CopyOracle& o, uint64_t budget = UINT64_MAX)
      : o_(&o), budget_(budget) {}
  bool less(uint64_t a, uint64_t b) { charge(); return o_->less(a, b); }
  uint64_t fimg(uint64_t a) { charge(); return o_->fimg(a); }
  uint64_t queries() const { return queries_; }

 private:
  void charge() {
    if (queries_ >= budget_) throw budget_error("oracle query budget exhausted");
    ++queries_;
  }
  const CopyOracle* o_;
  uint64_t budget_;
  uint64_t queries_ = 0;
};

class SuccView {
 public:
  explicit SuccView(const CopyOracle& o, uint64_t budget = UINT64_MAX)
      : o_(&o), budget_(budget) {}
  uint64_t succ(uint64_t a) {
    if (queries_ >= budget_) throw budget_error("oracle query budget exhausted");
    ++queries_;
    return o_->element_at(o_->position_of(a) + 1);
  }
  uint64_t queries() const { return queries_; }

 private:
  const CopyOracle* o_;
  uint64_t budget_;
  uint64_t queries_ = 0;
};

// --- builders -------------------------------------------------------------

// Names 0..n-1 appended in order.
CopySession standard_copy(uint64_t n);

// One operation per stage t < stages: op 0 appends, op v >= 1 inserts before
// position v-1. Inserting before position j at stage t is legal only while
// t < 2j + 2 (each position settles, so the limit really is a copy of omega);
// illegal ops raise structure_error, program divergence raises budget_error.
CopySession schedule_copy(const Program& sched, uint64_t stages, uint64_t per_stage_budget);
CopySession schedule_copy_ops(const std::vector<uint64_t>& ops);

// c.e. encoding: stage s >= 1 appends the adjacent marker pair (a_{s-1},
// b_{s-1}); whenever e enters W with its markers already present, one fresh
// element is inserted between a_e and b_e, spoiling their adjacency forever.
// In the completed copy, Succ(a_e) = b_e iff e never entered W by `stages`.
struct CeEncoding {
  CopySession session;
  std::vector<std::pair<uint64_t, uint64_t>> markers;  // markers[e] = (a_e, b_e)
};
CeEncoding ce_encoded_copy(const CeSet& w, uint64_t stages);

// Scripted Delta_2 approximation: per e an initial bit plus the stages at
// which it flips. File records: approx <e> init=<0|1> [flips=<comma list>]
class Delta2Approx {
 public:
  struct Entry {
    int init = 0;
    std::vector<uint64_t> flips;  // strictly increasing stage numbers
  };

  static Delta2Approx scripted(std::vector<Entry> entries);
  static Delta2Approx parse(std::string_view text);

  uint64_t domain() const { return entries_.size(); }
  int at(uint64_t e, uint64_t s) const;
  int limit(uint64_t e) const;
  uint64_t settle_stage() const;  // least s with approx(.,t) constant for t >= s
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// Delta_2 encoding against a host block layout that offers infinitely many
// 2-cycle starts and adjacent fixed-point pairs. The marker pair for e is
// named (4e, 4e+2) and always sits on two adjacent positions p, p+1; the
// current approximation decides which kind of position pattern it must
// occupy (bit 1: f(p) = p+1, f(p+1) = p; bit 0: f(p) = p, f(p+1) = p+1).
// Padding inserts (fresh odd names) slide pairs rightward on each flip; a
// left-to-right sweep realigns the later pairs. Runs out of matching
// locations -> structure_error.
struct Delta2Encoding {
  CopySession session;
  std::vector<std::pair<uint64_t, uint64_t>> markers;  // markers[e] = (4e, 4e+2)
};
Delta2Encoding delta2_encoded_copy(const Delta2Approx& approx, const BlockFunction& f,
                                   uint64_t stages);

// Read the encoded set back off the copy: bit(e) = 1 iff the marker pair of
// e sits on a 2-cycle pattern of f.
std::vector<int> delta2_decode(const Delta2Encoding& enc, const BlockFunction& f);

// Succ(a) = b in the completed copy.
bool succ_holds(const CopyOracle& o, uint64_t a, uint64_t b);

}  // namespace spectra
