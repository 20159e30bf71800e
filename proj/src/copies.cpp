#include "spectra/copies.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace spectra {
namespace {

std::vector<std::string> nonblank_lines(std::string_view text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b != std::string::npos) {
      size_t e = line.find_last_not_of(" \t\r");
      out.push_back(line.substr(b, e - b + 1));
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

uint64_t parse_u64(const std::string& tok, const char* what) {
  if (tok.empty()) throw parse_error(std::string("missing ") + what);
  uint64_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') throw parse_error(std::string("bad ") + what + " '" + tok + "'");
    if (v > (UINT64_MAX - 9) / 10) throw parse_error(std::string("huge ") + what);
    v = v * 10 + uint64_t(c - '0');
  }
  return v;
}

}  // namespace

// --- CopySession -----------------------------------------------------------

void CopySession::use_name(uint64_t name) {
  auto [it, fresh] = used_.emplace(name, true);
  (void)it;
  if (!fresh) throw std::invalid_argument("name " + std::to_string(name) + " already used");
}

uint64_t CopySession::least_unused() const {
  while (used_.count(unused_floor_)) ++unused_floor_;
  return unused_floor_;
}

uint64_t CopySession::append() {
  uint64_t name = least_unused();
  append_named(name);
  return name;
}

void CopySession::append_named(uint64_t name) {
  use_name(name);
  pos_[name] = elements_.size();
  elements_.push_back(name);
  log_.push_back("append " + std::to_string(name));
}

uint64_t CopySession::insert_before(uint64_t pos) {
  uint64_t name = least_unused();
  insert_named_before(name, pos);
  return name;
}

void CopySession::insert_named_before(uint64_t name, uint64_t pos) {
  if (pos > elements_.size()) throw std::out_of_range("insert past end of session");
  use_name(name);
  elements_.insert(elements_.begin() + long(pos), name);
  for (uint64_t p = pos; p < elements_.size(); ++p) pos_[elements_[p]] = p;
  for (Restraint& r : restraints_) {
    if (pos <= r.lo) {
      ++r.lo;
      if (r.hi != kNoBound) ++r.hi;
    } else if (r.hi == kNoBound || pos <= r.hi) {
      if (r.hi != kNoBound) ++r.hi;
    }
  }
  log_.push_back("insert " + std::to_string(name) + " before " + std::to_string(pos));
}

uint64_t CopySession::element_at(uint64_t pos) const {
  if (pos >= elements_.size()) throw std::out_of_range("position beyond session");
  return elements_[pos];
}

std::optional<uint64_t> CopySession::position_of(uint64_t name) const {
  auto it = pos_.find(name);
  if (it == pos_.end()) return std::nullopt;
  return it->second;
}

void CopySession::restrain(std::string owner, uint64_t lo, uint64_t hi) {
  if (owner.empty() || owner.find_first_of(" \t\n") != std::string::npos)
    throw std::invalid_argument("restraint owner must be a nonempty token");
  if (hi != kNoBound && hi < lo) throw std::invalid_argument("restraint hi < lo");
  std::ostringstream os;
  os << "restrain " << owner << ' ' << lo << ' ';
  if (hi == kNoBound)
    os << "inf";
  else
    os << hi;
  restraints_.push_back({std::move(owner), lo, hi});
  log_.push_back(os.str());
}

void CopySession::release(const std::string& owner) {
  restraints_.erase(std::remove_if(restraints_.begin(), restraints_.end(),
                                   [&](const Restraint& r) { return r.owner == owner; }),
                    restraints_.end());
  log_.push_back("release " + owner);
}

bool CopySession::would_violate(uint64_t pos, const std::string& owner) const {
  for (const Restraint& r : restraints_) {
    if (r.owner == owner) continue;
    if (r.lo <= pos && (r.hi == kNoBound || pos <= r.hi)) return true;
  }
  return false;
}

std::string CopySession::log_text() const {
  std::string out;
  for (const std::string& rec : log_) {
    out += rec;
    out += '\n';
  }
  return out;
}

CopySession CopySession::replay(std::string_view log_text) {
  return replay_prefix(log_text, UINT64_MAX);
}

CopySession CopySession::replay_prefix(std::string_view log_text, uint64_t events) {
  CopySession s;
  uint64_t seen = 0;
  for (const std::string& line : nonblank_lines(log_text)) {
    if (seen == events) break;
    ++seen;
    std::istringstream is(line);
    std::string kw;
    is >> kw;
    if (kw == "append") {
      std::string name;
      is >> name;
      s.append_named(parse_u64(name, "name"));
    } else if (kw == "insert") {
      std::string name, before, pos;
      is >> name >> before >> pos;
      if (before != "before") throw parse_error("malformed insert record: " + line);
      s.insert_named_before(parse_u64(name, "name"), parse_u64(pos, "position"));
    } else if (kw == "restrain") {
      std::string owner, lo, hi;
      is >> owner >> lo >> hi;
      if (owner.empty() || hi.empty()) throw parse_error("malformed restrain record: " + line);
      s.restrain(owner, parse_u64(lo, "lo"), hi == "inf" ? kNoBound : parse_u64(hi, "hi"));
    } else if (kw == "release") {
      std::string owner;
      is >> owner;
      if (owner.empty()) throw parse_error("malformed release record: " + line);
      s.release(owner);
    } else {
      throw parse_error("unknown log record: " + line);
    }
    std::string rest;
    if (is >> rest) throw parse_error("trailing tokens in log record: " + line);
  }
  return s;
}

// --- CopyOracle -------------------------------------------------------------

CopyOracle::CopyOracle(CopySession base, BlockFunction f)
    : f_(std::make_shared<BlockFunction>(std::move(f))) {
  elems_ = base.elements();
  for (uint64_t p = 0; p < elems_.size(); ++p) {
    pos_[elems_[p]] = p;
    used_[elems_[p]] = true;
  }
  base_size_ = elems_.size();
}

void CopyOracle::materialize_to(uint64_t pos) const {
  while (elems_.size() <= pos) {
    while (used_.count(fresh_floor_)) ++fresh_floor_;
    uint64_t name = fresh_floor_;
    used_[name] = true;
    pos_[name] = elems_.size();
    elems_.push_back(name);
  }
}

void CopyOracle::materialize_name(uint64_t name) const {
  while (!pos_.count(name)) {
    materialize_to(elems_.size());  // appends exactly one fresh name
  }
}

uint64_t CopyOracle::element_at(uint64_t pos) const {
  std::lock_guard<std::mutex> lk(mu_);
  materialize_to(pos);
  return elems_[pos];
}

uint64_t CopyOracle::position_of(uint64_t name) const {
  std::lock_guard<std::mutex> lk(mu_);
  materialize_name(name);
  return pos_.at(name);
}

bool CopyOracle::less(uint64_t a, uint64_t b) const {
  std::lock_guard<std::mutex> lk(mu_);
  materialize_name(a);
  materialize_name(b);
  return pos_.at(a) < pos_.at(b);
}

uint64_t CopyOracle::fimg(uint64_t a) const {
  std::lock_guard<std::mutex> lk(mu_);
  materialize_name(a);
  uint64_t p = pos_.at(a);
  auto v = f_->value(p);
  if (!v) throw budget_error("fimg: f undefined at position " + std::to_string(p));
  materialize_to(*v);
  return elems_[*v];
}

// --- builders ----------------------------------------------------------------

CopySession standard_copy(uint64_t n) {
  CopySession s;
  for (uint64_t i = 0; i < n; ++i) s.append_named(i);
  return s;
}

CopySession schedule_copy_ops(const std::vector<uint64_t>& ops) {
  CopySession s;
  for (uint64_t t = 0; t < ops.size(); ++t) {
    uint64_t op = ops[t];
    if (op == 0) {
      s.append();
      continue;
    }
    uint64_t j = op - 1;
    if (j > s.size())
      throw structure_error("stage " + std::to_string(t) + ": insert before position " +
                            std::to_string(j) + " of a " + std::to_string(s.size()) +
                            "-element session");
    if (t >= 2 * j + 2)
      throw structure_error("stage " + std::to_string(t) + ": position " + std::to_string(j) +
                            " is already settled (needs t < 2j+2)");
    s.insert_before(j);
  }
  return s;
}

CopySession schedule_copy(const Program& sched, uint64_t stages, uint64_t per_stage_budget) {
  std::vector<uint64_t> ops;
  ops.reserve(stages);
  for (uint64_t t = 0; t < stages; ++t) {
    EvalResult r = evaluate(sched, t, per_stage_budget);
    if (!r.halted)
      throw budget_error("schedule program exhausted its budget at stage " + std::to_string(t));
    ops.push_back(r.value);
  }
  return schedule_copy_ops(ops);
}

CeEncoding ce_encoded_copy(const CeSet& w, uint64_t stages) {
  CeEncoding enc;
  std::vector<bool> spoiled(stages, false);
  for (uint64_t s = 1; s <= stages; ++s) {
    uint64_t a = enc.session.append();
    uint64_t b = enc.session.append();
    enc.markers.emplace_back(a, b);
    for (uint64_t e : w.at_stage(s)) {
      if (e >= enc.markers.size() || spoiled[e]) continue;
      uint64_t pb = *enc.session.position_of(enc.markers[e].second);
      enc.session.insert_before(pb);
      spoiled[e] = true;
    }
  }
  return enc;
}

// --- Delta2 ------------------------------------------------------------------

Delta2Approx Delta2Approx::scripted(std::vector<Entry> entries) {
  for (const Entry& e : entries) {
    if (e.init != 0 && e.init != 1) throw std::invalid_argument("approx init must be 0 or 1");
    for (size_t i = 0; i < e.flips.size(); ++i) {
      if (e.flips[i] == 0) throw std::invalid_argument("flip stages start at 1");
      if (i && e.flips[i] <= e.flips[i - 1])
        throw std::invalid_argument("flip stages must increase strictly");
    }
  }
  Delta2Approx a;
  a.entries_ = std::move(entries);
  return a;
}

Delta2Approx Delta2Approx::parse(std::string_view text) {
  std::vector<std::optional<Entry>> slots;
  for (const std::string& line : nonblank_lines(text)) {
    std::istringstream is(line);
    std::string kw, e_tok, init_tok, flips_tok;
    is >> kw >> e_tok >> init_tok;
    if (kw != "approx" || init_tok.rfind("init=", 0) != 0)
      throw parse_error("expected 'approx <e> init=<0|1> [flips=<list>]': " + line);
    Entry ent;
    std::string bit = init_tok.substr(5);
    if (bit != "0" && bit != "1") throw parse_error("init must be 0 or 1: " + line);
    ent.init = bit == "1";
    if (is >> flips_tok) {
      if (flips_tok.rfind("flips=", 0) != 0) throw parse_error("expected flips=<list>: " + line);
      std::string list = flips_tok.substr(6), item;
      std::istringstream ls(list);
      while (std::getline(ls, item, ',')) ent.flips.push_back(parse_u64(item, "flip stage"));
      std::string rest;
      if (is >> rest) throw parse_error("trailing tokens: " + line);
    }
    uint64_t e = parse_u64(e_tok, "index");
    if (slots.size() <= e) slots.resize(e + 1);
    if (slots[e]) throw parse_error("duplicate approx record for e=" + e_tok);
    slots[e] = std::move(ent);
  }
  std::vector<Entry> entries;
  for (size_t e = 0; e < slots.size(); ++e) {
    if (!slots[e]) throw parse_error("missing approx record for e=" + std::to_string(e));
    entries.push_back(std::move(*slots[e]));
  }
  return scripted(std::move(entries));
}

int Delta2Approx::at(uint64_t e, uint64_t s) const {
  const Entry& ent = entries_.at(e);
  uint64_t n = 0;
  for (uint64_t f : ent.flips)
    if (f <= s) ++n;
  return ent.init ^ int(n & 1);
}

int Delta2Approx::limit(uint64_t e) const {
  const Entry& ent = entries_.at(e);
  return ent.init ^ int(ent.flips.size() & 1);
}

uint64_t Delta2Approx::settle_stage() const {
  uint64_t s = 0;
  for (const Entry& e : entries_)
    if (!e.flips.empty()) s = std::max(s, e.flips.back());
  return s;
}

namespace {

constexpr uint64_t kLocationScanWindow = uint64_t(1) << 20;

// -1: neither pattern; 0: adjacent fixed points; 1: 2-cycle
int pattern_kind(const BlockFunction& f, uint64_t p) {
  auto v0 = f.value(p), v1 = f.value(p + 1);
  if (!v0 || !v1) return -2;
  if (*v0 == p + 1 && *v1 == p) return 1;
  if (*v0 == p && *v1 == p + 1) return 0;
  return -1;
}

uint64_t find_location(const BlockFunction& f, uint64_t from, int kind, uint64_t e) {
  for (uint64_t q = from; q < from + kLocationScanWindow; ++q) {
    int k = pattern_kind(f, q);
    if (k == -2)
      throw structure_error("host layout exhausted while homing marker pair " + std::to_string(e));
    if (k == kind) return q;
  }
  throw structure_error("no " + std::string(kind ? "2-cycle" : "fixed-pair") +
                        " location within the scan window for marker pair " + std::to_string(e));
}

}  // namespace

Delta2Encoding delta2_encoded_copy(const Delta2Approx& approx, const BlockFunction& f,
                                   uint64_t stages) {
  Delta2Encoding enc;
  uint64_t next_odd = 1;
  auto pad_name = [&]() {
    uint64_t n = next_odd;
    next_odd += 2;
    return n;
  };

  for (uint64_t e = 0; e < approx.domain(); ++e) {
    int kind = approx.at(e, 0);
    uint64_t q = find_location(f, enc.session.size(), kind, e);
    while (enc.session.size() < q) enc.session.append_named(pad_name());
    enc.session.append_named(4 * e);
    enc.session.append_named(4 * e + 2);
    enc.markers.emplace_back(4 * e, 4 * e + 2);
  }

  for (uint64_t s = 1; s <= stages; ++s) {
    for (uint64_t e = 0; e < approx.domain(); ++e) {
      int kind = approx.at(e, s);
      uint64_t p = *enc.session.position_of(4 * e);
      if (pattern_kind(f, p) == kind) continue;
      uint64_t q = find_location(f, p, kind, e);
      while (*enc.session.position_of(4 * e) < q)
        enc.session.insert_named_before(pad_name(), *enc.session.position_of(4 * e));
    }
  }
  return enc;
}

std::vector<int> delta2_decode(const Delta2Encoding& enc, const BlockFunction& f) {
  std::vector<int> bits;
  for (uint64_t e = 0; e < enc.markers.size(); ++e) {
    auto p = enc.session.position_of(enc.markers[e].first);
    auto p2 = enc.session.position_of(enc.markers[e].second);
    if (!p || !p2 || *p2 != *p + 1)
      throw structure_error("marker pair " + std::to_string(e) + " is not adjacent");
    int k = pattern_kind(f, *p);
    if (k != 0 && k != 1)
      throw structure_error("marker pair " + std::to_string(e) + " sits on no coding pattern");
    bits.push_back(k);
  }
  return bits;
}

bool succ_holds(const CopyOracle& o, uint64_t a, uint64_t b) {
  return o.position_of(b) == o.position_of(a) + 1;
}

}  // namespace spectra
