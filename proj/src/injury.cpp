#include "spectra/injury.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace spectra {

uint64_t pair_code(uint64_t x, uint64_t y) {
  uint64_t s = x + y;
  return s * (s + 1) / 2 + y;
}

std::pair<uint64_t, uint64_t> unpair_code(uint64_t p) {
  uint64_t w = uint64_t((std::sqrt(double(8 * p + 1)) - 1) / 2);
  while (w * (w + 1) / 2 > p) --w;
  while ((w + 1) * (w + 2) / 2 <= p) ++w;
  uint64_t t = w * (w + 1) / 2;
  uint64_t y = p - t;
  return {w - y, y};
}

// --- finite injury -----------------------------------------------------------

namespace {

void append_shape_at(std::vector<uint64_t>& fvals, const FiniteStructure& shape) {
  uint64_t base = fvals.size();
  for (uint64_t v : shape.fvals) fvals.push_back(base + v);
}

FiniteStructure cycle_shape(uint64_t l) {
  FiniteStructure s;
  s.fvals.resize(l);
  for (uint64_t k = 0; k + 1 < l; ++k) s.fvals[k] = k + 1;
  s.fvals[l - 1] = 0;
  return s;
}

}  // namespace

FiniteInjuryReport run_finite_injury(const std::vector<Program>& catalog,
                                     const FiniteInjuryOptions& opt) {
  FiniteInjuryReport rep;
  rep.fvals = {0, 2, 1};  // seed: a fixed point and a 2-cycle
  rep.known_types.push_back(FiniteStructure({0}));
  rep.known_types.push_back(FiniteStructure({1, 0}));
  rep.requirements.resize(catalog.size());
  uint64_t max_block = 2;

  auto note = [&](std::string line) { rep.log.push_back(std::move(line)); };
  auto learn_type = [&](const FiniteStructure& shape) {
    for (const auto& t : rep.known_types)
      if (structures_isomorphic(t, shape)) return;
    rep.known_types.push_back(shape);
  };

  for (uint64_t s = 1; s <= opt.stages; ++s) {
    using Status = FiniteInjuryReport::Status;

    // one fresh witness per stage for the strongest idle requirement
    for (uint64_t i = 0; i < catalog.size(); ++i) {
      auto& r = rep.requirements[i];
      if (r.status != Status::Idle || i + 1 > s) continue;
      uint64_t l = max_block + 1;
      uint64_t w = rep.fvals.size();
      FiniteStructure cyc = cycle_shape(l);
      append_shape_at(rep.fvals, cyc);
      learn_type(cyc);
      max_block = l;
      r.status = Status::Waiting;
      r.witness = w;
      r.cycle_len = l;
      std::ostringstream os;
      os << "stage " << s << ": P" << i << " takes witness " << w << " (cycle of " << l << ")";
      note(os.str());
      break;
    }

    // watch the catalog; passive settles are free, one action per stage
    std::optional<uint64_t> actor;
    for (uint64_t i = 0; i < catalog.size(); ++i) {
      auto& r = rep.requirements[i];
      if (r.status != Status::Waiting) continue;
      EvalResult e = evaluate(catalog[i], r.witness, s);
      if (!e.halted) continue;
      if (e.value == 1) {
        if (!actor) actor = i;
      } else {
        r.status = Status::SettledCp1;
        r.phi_value = e.value;
        r.settled_stage = s;
        std::ostringstream os;
        os << "stage " << s << ": P" << i << " settles, phi=" << e.value << " while cp stays 1";
        note(os.str());
      }
    }
    if (actor) {
      uint64_t i = *actor;
      auto& r = rep.requirements[i];
      uint64_t n = rep.fvals.size();
      rep.fvals.push_back(r.witness);  // second preimage for the witness
      r.status = Status::ActedCp2;
      r.phi_value = 1;
      r.settled_stage = s;
      FiniteStructure giant;
      giant.fvals.assign(rep.fvals.begin() + long(r.witness), rep.fvals.end());
      for (auto& v : giant.fvals) v -= r.witness;
      learn_type(giant);
      max_block = std::max(max_block, n - r.witness + 1);
      {
        std::ostringstream os;
        os << "stage " << s << ": P" << i << " acts, f(" << n << ") := " << r.witness
           << ", block [" << r.witness << "," << n << "] forms";
        note(os.str());
      }
      for (uint64_t j = i + 1; j < catalog.size(); ++j) {
        auto& rj = rep.requirements[j];
        if (rj.status == Status::Waiting) {
          rj.status = Status::Idle;
          ++rj.injuries;
          std::ostringstream os;
          os << "stage " << s << ": P" << j << " injured";
          note(os.str());
        }
      }
    }

    // replication: every known type gets two fresh adjacent copies
    for (const FiniteStructure& t : rep.known_types) {
      append_shape_at(rep.fvals, t);
      append_shape_at(rep.fvals, t);
    }
    if (rep.fvals.size() > opt.max_length)
      throw structure_error("finite injury prefix exceeded the growth guard");
    rep.stages_run = s;
  }
  return rep;
}

// --- tree construction ---------------------------------------------------------

namespace {

// Host block geometry with a fast path through a declarative layout.
struct HostBlocks {
  const BlockFunction* f;
  uint64_t window;
  std::vector<Block> cache;  // genuine blocks, contiguous from 0
  uint64_t covered = 0;      // positions [0, covered) lie in cached genuine blocks
  uint64_t probe = 8;

  Block at(uint64_t pos) {
    if (const BlockSpec* spec = f->spec()) {
      if (!spec->has_tail() && pos >= spec->header_length())
        throw structure_error("host layout ends before position " + std::to_string(pos));
      return spec->block_at(pos);
    }
    while (pos >= covered) {
      probe = std::max(2 * probe, pos + 2);
      if (probe > pos + window) throw structure_error("host block scan window exceeded");
      DecomposeResult d = decompose_prefix(*f, probe);
      if (!d.ok())
        throw structure_error("host prefix fails to decompose at position " +
                              std::to_string(d.failure->position));
      cache = d.blocks;
      if (cache.size() > 1) {
        cache.pop_back();  // last greedy piece may be a prefix verdict, not a block
        covered = cache.back().interval.hi + 1;
      }
    }
    for (const Block& b : cache)
      if (b.interval.contains(pos)) return b;
    throw structure_error("host block lookup failed");  // unreachable
  }

  uint64_t next_boundary(uint64_t pos) {
    Block b = at(pos);
    return b.interval.lo == pos ? pos : b.interval.hi + 1;
  }
};

int gamma_bit(const CopySession& s, const BlockFunction& f, uint64_t code) {
  auto [a, b] = unpair_code(code);
  auto pa = s.position_of(a);
  if (!pa) return 0;
  auto v = f.value(*pa);
  if (!v || *v >= s.size()) return 0;
  return s.element_at(*v) == b ? 1 : 0;
}

std::vector<uint8_t> gamma_prefix(const CopySession& s, const BlockFunction& f, uint64_t nbits) {
  std::vector<uint8_t> bits(nbits);
  for (uint64_t q = 0; q < nbits; ++q) bits[q] = uint8_t(gamma_bit(s, f, q));
  return bits;
}

std::vector<uint8_t> w_prefix(const CeSet& w, uint64_t stage, uint64_t nbits) {
  std::vector<uint8_t> bits(nbits, 0);
  for (uint64_t e : w.at_stage(stage))
    if (e < nbits) bits[e] = 1;
  return bits;
}

struct Node {
  std::string address;
  std::string owner;
  uint64_t depth = 0;
  bool stopped = false;
  uint64_t aligned_at_stop = 0;
  std::vector<SlotRecord> slots;
};

std::string slot_outcome(const Node& n) {
  if (n.stopped) return "s";
  const SlotRecord& last = n.slots.back();
  using St = SlotRecord::State;
  if (last.state == St::ChooseBlocks || last.state == St::WatchZero)
    return "w" + std::to_string(last.m);
  return "w'" + std::to_string(last.m);
}

struct TreeEngine {
  const BlockFunction& f;
  const std::vector<TreeRequirement>& reqs;
  const TreeOptions& opt;
  HostBlocks host;
  CopySession session;
  MarkedPrefix marks;
  uint64_t aligned_len = 0;
  std::map<std::string, Node> nodes;
  std::vector<std::string> narration;

  TreeEngine(const BlockFunction& f_, const std::vector<TreeRequirement>& r_,
             const TreeOptions& o_)
      : f(f_), reqs(r_), opt(o_), host{&f_, o_.boundary_scan_window, {}, 0, 8} {}

  void note(uint64_t stage, const std::string& what) {
    std::ostringstream os;
    os << "stage " << stage << ": " << what;
    narration.push_back(os.str());
  }

  // --- marked-chunk bookkeeping ---------------------------------------------

  uint64_t append_unmarked() {
    uint64_t name = session.append();
    marks.chunks.push_back({false, {}, {name}});
    return name;
  }

  std::vector<uint64_t> append_block(const FiniteStructure& shape) {
    std::vector<uint64_t> names;
    for (uint64_t i = 0; i < shape.size(); ++i) names.push_back(session.append());
    marks.chunks.push_back({true, shape, names});
    return names;
  }

  uint64_t insert_unmarked(uint64_t pos) {
    uint64_t cum = 0;
    size_t idx = 0;
    for (; idx < marks.chunks.size(); ++idx) {
      if (cum == pos) break;
      uint64_t len = marks.chunks[idx].names.size();
      if (pos < cum + len)
        throw std::logic_error("insert lands strictly inside a marked chunk");
      cum += len;
    }
    uint64_t name = session.insert_before(pos);
    marks.chunks.insert(marks.chunks.begin() + long(idx), {false, {}, {name}});
    return name;
  }

  // --- node lifecycle ----------------------------------------------------------

  Node& node_at(const std::string& address, uint64_t depth) {
    auto it = nodes.find(address);
    if (it == nodes.end()) {
      Node n;
      n.address = address;
      n.owner = address.empty() ? "n" : "n." + address;
      n.depth = depth;
      n.slots.push_back(SlotRecord{});
      it = nodes.emplace(address, std::move(n)).first;
    }
    return it->second;
  }

  void initialize_descendants(const Node& n, uint64_t stage) {
    std::string prefix = n.address.empty() ? "" : n.address + ".";
    for (auto it = nodes.begin(); it != nodes.end();) {
      if (it->first != n.address &&
          (prefix.empty() ? !it->first.empty() : it->first.rfind(prefix, 0) == 0)) {
        session.release(it->second.owner);
        note(stage, "node [" + it->first + "] initialized");
        it = nodes.erase(it);
      } else {
        ++it;
      }
    }
  }

  uint64_t fixed_floor_for(const Node& n, uint64_t range_len) const {
    // Only higher-priority restraints bind: descendants get initialized when
    // the realignment succeeds, so their restraints don't pin the floor.
    std::string sub = n.owner + ".";
    uint64_t floor = aligned_len;
    for (const Restraint& r : session.restraints()) {
      if (r.owner == n.owner || r.owner.rfind(sub, 0) == 0) continue;
      if (r.hi == CopySession::kNoBound) return range_len + 1;  // unsatisfiable
      floor = std::max(floor, r.hi + 1);
    }
    return floor;
  }

  // --- steps ------------------------------------------------------------------

  bool step2(Node& n, SlotRecord& slot, uint64_t stage) {
    uint64_t len = session.size();
    if (session.would_violate(len, n.owner)) return false;  // tail restraint holds us
    uint64_t b0 = host.next_boundary(len);
    Block c = host.at(b0);
    Block d = host.at(c.interval.hi + 1);
    while (d.interval.size() < 2) {
      if (d.interval.lo - len > opt.boundary_scan_window)
        throw structure_error("no non-singleton block within the scan window");
      c = d;
      d = host.at(c.interval.hi + 1);
    }
    for (uint64_t p = len; p < c.interval.lo; ++p) append_unmarked();
    slot.c_names = append_block(c.shape);
    slot.d_names = append_block(d.shape);
    if (session.size() > opt.session_cap)
      throw structure_error("session exceeded the growth cap");

    if (opt.pair_rule == PairRule::PreimageLeft) {
      // q = D's inner preimage of its own start; x sits one slot left of it
      uint64_t k = 0;
      while (k < d.shape.size() && d.shape.fvals[k] != 0) ++k;
      if (k == 0 || k == d.shape.size())
        throw structure_error("block D has no inner preimage of its start");
      slot.x_name = slot.d_names[k - 1];
      slot.y_name = slot.c_names.back();
    } else {
      uint64_t j = d.shape.fvals[0];
      if (j == 0) throw structure_error("block D starts with a fixed point");
      slot.x_name = slot.c_names.back();
      slot.y_name = slot.d_names[j - 1];
    }
    slot.pair = pair_code(slot.x_name, slot.y_name);
    session.release(n.owner);
    session.restrain(n.owner, 0, session.size() - 1);
    slot.state = SlotRecord::State::WatchZero;
    {
      std::ostringstream os;
      os << "node [" << n.address << "] slot " << slot.m << ": blocks C=[" << c.interval.lo
         << "," << c.interval.hi << "] D=[" << d.interval.lo << "," << d.interval.hi
         << "], pair <" << slot.x_name << "," << slot.y_name << "> code " << slot.pair;
      note(stage, os.str());
    }
    return true;
  }

  // longest prefix of inputs on which Phi^Gamma agrees with W at this stage
  uint64_t agreement_prefix(const TreeRequirement& req, uint64_t stage,
                            const std::vector<uint8_t>& gamma) {
    uint64_t a = 0;
    for (; a < stage; ++a) {
      OracleEvalResult r = evaluate_with_oracle(req.phi, a, gamma, stage);
      if (!r.halted()) break;
      if (r.value != (req.w.contains(a, stage) ? 1 : 0)) break;
    }
    return a;
  }

  void step3(Node& n, SlotRecord& slot, uint64_t stage) {
    const TreeRequirement& req = reqs[n.depth];
    if (gamma_bit(session, f, slot.pair) != 0) return;
    std::vector<uint8_t> gamma = gamma_prefix(session, f, stage);
    uint64_t agree = agreement_prefix(req, stage, gamma);
    for (uint64_t t1 = 1; t1 <= agree; ++t1) {
      std::vector<uint8_t> wb = w_prefix(req.w, stage, t1);
      OracleEvalResult r = evaluate_with_oracle(req.psi, slot.pair, wb, stage);
      if (!r.halted() || r.value != 0 || r.use > t1) continue;
      slot.t1 = t1;
      slot.s1 = stage;
      slot.marker_s1 = session.event_count();
      step4(n, slot, stage);
      return;
    }
  }

  void step4(Node& n, SlotRecord& slot, uint64_t stage) {
    initialize_descendants(n, stage);
    uint64_t p = *session.position_of(slot.c_names.front());
    if (session.would_violate(p, n.owner))
      throw structure_error("attack position is under a live foreign restraint");
    uint64_t fresh = insert_unmarked(p);
    session.release(n.owner);
    session.restrain(n.owner, 0, session.size() - 1);
    if (gamma_bit(session, f, slot.pair) != 1)
      throw std::logic_error("attack insert failed to raise the pair bit");
    slot.marker_post_insert = session.event_count();
    slot.state = SlotRecord::State::WatchOne;
    {
      std::ostringstream os;
      os << "node [" << n.address << "] slot " << slot.m << ": step 4 fires, t'=" << slot.t1
         << ", inserts " << fresh << " before position " << p << ", bit(" << slot.pair
         << ") = 1";
      note(stage, os.str());
    }
  }

  void step5(Node& n, SlotRecord& slot, uint64_t stage) {
    const TreeRequirement& req = reqs[n.depth];
    if (gamma_bit(session, f, slot.pair) != 1)
      throw std::logic_error("pair bit fell back to 0 while watching at step 5");
    std::vector<uint8_t> gamma = gamma_prefix(session, f, stage);
    uint64_t agree = agreement_prefix(req, stage, gamma);
    for (uint64_t t2 = std::max<uint64_t>(slot.t1, 1); t2 <= agree; ++t2) {
      std::vector<uint8_t> wb = w_prefix(req.w, stage, t2);
      OracleEvalResult r = evaluate_with_oracle(req.psi, slot.pair, wb, stage);
      if (!r.halted() || r.value != 1 || r.use > t2) continue;
      slot.t2 = t2;
      slot.s2 = stage;
      slot.marker_s2 = session.event_count();
      slot.state = SlotRecord::State::WaitXi;
      {
        std::ostringstream os;
        os << "node [" << n.address << "] slot " << slot.m << ": step 5 fires, t''=" << t2
           << "; waiting for a semi-embedding";
        note(stage, os.str());
      }
      if (slot.m + 1 < opt.m_cap) {
        SlotRecord next;
        next.m = slot.m + 1;
        n.slots.push_back(next);
        note(stage, "node [" + n.address + "] spawns slot " + std::to_string(next.m));
      }
      return;
    }
  }

  bool try_step7(Node& n, SlotRecord& slot, uint64_t stage) {
    // 2|A_s|+1 elements of host room, rounded up so the range is whole blocks
    uint64_t range = host.next_boundary(2 * session.size() + 1);
    uint64_t floor = fixed_floor_for(n, range);
    if (floor > range) return false;
    auto xi = find_semi_embedding(session, marks, f, range, floor);
    if (!xi) return false;
    if (!verify_semi_embedding(session, marks, f, *xi, range, floor))
      throw std::logic_error("search produced a semi-embedding its verifier rejects");

    initialize_descendants(n, stage);
    uint64_t max_image = xi->image.empty() ? 0 : xi->image.back();
    uint64_t n_end = host.next_boundary(max_image + 1);
    // realign: fresh elements fill every non-image position of [0, n_end)
    std::set<uint64_t> taken(xi->image.begin(), xi->image.end());
    for (uint64_t p = 0; p < n_end; ++p) {
      if (taken.count(p)) continue;
      if (session.would_violate(p, n.owner))
        throw structure_error("repair position is under a live foreign restraint");
      insert_unmarked(p);
    }
    if (session.size() != n_end) throw std::logic_error("repair failed to align the session");
    // the whole prefix is standard again: re-mark it block by block
    MarkedPrefix fresh_marks;
    uint64_t p = 0;
    while (p < n_end) {
      Block b = host.at(p);
      MarkedChunk ch;
      ch.marked = true;
      ch.shape = b.shape;
      for (uint64_t q = b.interval.lo; q <= b.interval.hi; ++q)
        ch.names.push_back(session.element_at(q));
      fresh_marks.chunks.push_back(std::move(ch));
      p = b.interval.hi + 1;
    }
    marks = std::move(fresh_marks);
    aligned_len = n_end;
    session.release(n.owner);
    session.restrain(n.owner, 0, n_end - 1);
    slot.marker_final = session.event_count();
    if (gamma_bit(session, f, slot.pair) != 0)
      throw std::logic_error("repair did not restore the pair bit to 0");
    slot.state = SlotRecord::State::Done;
    n.stopped = true;
    n.aligned_at_stop = n_end;
    {
      std::ostringstream os;
      os << "node [" << n.address << "] slot " << slot.m
         << ": step 7 realigns to [0," << n_end << "), bit(" << slot.pair
         << ") back to 0, node stops";
      note(stage, os.str());
    }
    return true;
  }

  void visit(Node& n, uint64_t stage) {
    if (n.stopped) return;
    for (SlotRecord& slot : n.slots)
      if (slot.state == SlotRecord::State::WaitXi && try_step7(n, slot, stage)) return;
    SlotRecord& last = n.slots.back();
    switch (last.state) {
      case SlotRecord::State::ChooseBlocks:
        step2(n, last, stage);
        break;
      case SlotRecord::State::WatchZero:
        step3(n, last, stage);
        break;
      case SlotRecord::State::WatchOne:
        step5(n, last, stage);
        break;
      default:
        break;  // all slots waiting on xi
    }
  }
};

}  // namespace

ConstructionReport run_tree_construction(const BlockFunction& f,
                                         const std::vector<TreeRequirement>& reqs,
                                         const TreeOptions& opt) {
  if (reqs.empty()) throw std::invalid_argument("tree construction needs a requirement");
  TreeEngine eng(f, reqs, opt);
  std::string path;

  for (uint64_t stage = 1; stage <= opt.stages; ++stage) {
    std::string address;
    path.clear();
    for (uint64_t depth = 0; depth < reqs.size(); ++depth) {
      Node& n = eng.node_at(address, depth);
      std::string before = slot_outcome(n);
      eng.visit(n, stage);
      std::string out = slot_outcome(n);
      if (out != before) eng.initialize_descendants(n, stage);
      path += (depth ? "." : "") + out;
      address = address.empty() ? out : address + "." + out;
    }
  }

  ConstructionReport rep;
  rep.session = eng.session;
  rep.current_path = path;
  rep.narration = std::move(eng.narration);
  rep.stages_run = opt.stages;
  for (auto& [addr, node] : eng.nodes) {
    NodeRecord r;
    r.address = addr;
    r.outcome = slot_outcome(node);
    r.stopped = node.stopped;
    r.aligned_len = node.aligned_at_stop;
    r.slots = node.slots;
    rep.nodes.push_back(std::move(r));
  }
  return rep;
}

// --- verification ---------------------------------------------------------------

namespace {

std::vector<uint8_t> w_bits_at(const CeSet& w, uint64_t stage, uint64_t nbits) {
  std::vector<uint8_t> bits(nbits, 0);
  for (uint64_t e : w.at_stage(stage))
    if (e < nbits) bits[e] = 1;
  return bits;
}

}  // namespace

VerifyOutcome verify_stop_witness(const std::string& log_text, const SlotRecord& slot,
                                  const TreeRequirement& req, const BlockFunction& f) {
  auto fail = [](std::string why) { return VerifyOutcome{false, std::move(why)}; };
  if (slot.t1 == 0 || slot.s1 == 0 || slot.marker_s1 > slot.marker_post_insert ||
      slot.marker_post_insert > slot.marker_s2 || slot.marker_s2 > slot.marker_final)
    return fail("malformed-witness");

  CopySession at_s1, post_insert, final_s;
  try {
    at_s1 = CopySession::replay_prefix(log_text, slot.marker_s1);
    post_insert = CopySession::replay_prefix(log_text, slot.marker_post_insert);
    final_s = CopySession::replay_prefix(log_text, slot.marker_final);
  } catch (const std::exception& e) {
    return fail(std::string("log-replay-failed: ") + e.what());
  }

  if (gamma_bit(at_s1, f, slot.pair) != 0) return fail("bit-not-zero-before-insert");
  {
    std::vector<uint8_t> wb = w_bits_at(req.w, slot.s1, slot.t1);
    OracleEvalResult r = evaluate_with_oracle(req.psi, slot.pair, wb, slot.s1);
    if (!r.halted() || r.value != 0 || r.use > slot.t1) return fail("psi-zero-check-failed");
  }
  if (gamma_bit(post_insert, f, slot.pair) != 1) return fail("bit-not-one-after-insert");
  {
    std::vector<uint8_t> wb = w_bits_at(req.w, slot.s2, slot.t2);
    OracleEvalResult r = evaluate_with_oracle(req.psi, slot.pair, wb, slot.s2);
    if (!r.halted() || r.value != 1 || r.use > slot.t2) return fail("psi-one-check-failed");
  }

  std::vector<uint64_t> before = req.w.at_stage(slot.s1);
  std::optional<uint64_t> entered;
  for (uint64_t e : req.w.at_stage(slot.s2)) {
    if (e >= slot.t1) continue;
    if (!std::binary_search(before.begin(), before.end(), e)) {
      entered = e;
      break;
    }
  }
  if (!entered) return fail("no-w-entry-below-use");
  uint64_t a = *entered;

  std::vector<uint8_t> gamma_s1 = gamma_prefix(at_s1, f, slot.s1);
  OracleEvalResult phi_then = evaluate_with_oracle(req.phi, a, gamma_s1, slot.s1);
  if (!phi_then.halted() || phi_then.value != 0) return fail("phi-disagrees-at-s1");
  uint64_t v = phi_then.use;

  std::vector<uint8_t> gamma_final = gamma_prefix(final_s, f, v);
  for (uint64_t q = 0; q < v; ++q)
    if (gamma_final[q] != gamma_s1[q]) return fail("gamma-prefix-disturbed");

  OracleEvalResult phi_now = evaluate_with_oracle(req.phi, a, gamma_final, slot.s1);
  if (!phi_now.halted() || phi_now.value != 0) return fail("phi-final-run-changed");
  if (!req.w.contains(a, slot.s2)) return fail("w-final-does-not-hold-entry");
  return VerifyOutcome{true, ""};
}

}  // namespace spectra
