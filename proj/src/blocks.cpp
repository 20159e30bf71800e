#include "spectra/blocks.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace spectra {
namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    out.push_back(line);
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

std::string strip(const std::string& s) {
  size_t hash = s.find('#');
  std::string t = hash == std::string::npos ? s : s.substr(0, hash);
  size_t b = t.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = t.find_last_not_of(" \t\r");
  return t.substr(b, e - b + 1);
}

uint64_t to_number(const std::string& tok, size_t lineno, const char* what) {
  if (tok.empty()) throw parse_error("line " + std::to_string(lineno) + ": missing " + what);
  uint64_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9')
      throw parse_error("line " + std::to_string(lineno) + ": bad " + what + " '" + tok + "'");
    if (v > (UINT64_MAX - 9) / 10) throw parse_error("line " + std::to_string(lineno) + ": huge " + what);
    v = v * 10 + uint64_t(c - '0');
  }
  return v;
}

}  // namespace

// --- BlockSpec -----------------------------------------------------------

BlockSpec BlockSpec::parse(std::string_view text) {
  std::vector<FiniteStructure> types;
  std::unordered_map<uint64_t, uint64_t> id_to_index;
  std::vector<uint64_t> ids;
  std::vector<Emit> emits;
  std::vector<uint64_t> tail_ids;
  bool saw_tail = false;

  auto lines = split_lines(text);
  for (size_t li = 0; li < lines.size(); ++li) {
    std::string line = strip(lines[li]);
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string kw;
    is >> kw;
    if (kw == "type") {
      std::string id_tok, fv_tok;
      is >> id_tok >> fv_tok;
      if (id_tok.empty() || fv_tok.rfind("fvals=", 0) != 0)
        throw parse_error("line " + std::to_string(li + 1) + ": expected 'type <id> fvals=<list>'");
      std::string rest;
      if (is >> rest) throw parse_error("line " + std::to_string(li + 1) + ": trailing tokens");
      uint64_t id = to_number(id_tok, li + 1, "type id");
      if (id_to_index.count(id)) throw parse_error("line " + std::to_string(li + 1) + ": duplicate type id");
      std::vector<uint64_t> fvals;
      std::string list = fv_tok.substr(6);
      size_t p = 0;
      while (p <= list.size()) {
        size_t c = list.find(',', p);
        std::string item = list.substr(p, c == std::string::npos ? std::string::npos : c - p);
        fvals.push_back(to_number(item, li + 1, "fval"));
        if (c == std::string::npos) break;
        p = c + 1;
      }
      for (uint64_t v : fvals)
        if (v >= fvals.size())
          throw parse_error("line " + std::to_string(li + 1) + ": fval escapes the type (not function-closed)");
      id_to_index[id] = types.size();
      ids.push_back(id);
      types.push_back(FiniteStructure(std::move(fvals)));
    } else if (kw == "emit") {
      std::string id_tok, x_tok;
      is >> id_tok >> x_tok;
      if (id_tok.empty() || x_tok.size() < 2 || x_tok[0] != 'x')
        throw parse_error("line " + std::to_string(li + 1) + ": expected 'emit <type-id> x<count>'");
      std::string rest;
      if (is >> rest) throw parse_error("line " + std::to_string(li + 1) + ": trailing tokens");
      uint64_t id = to_number(id_tok, li + 1, "type id");
      uint64_t count = to_number(x_tok.substr(1), li + 1, "count");
      auto it = id_to_index.find(id);
      if (it == id_to_index.end())
        throw parse_error("line " + std::to_string(li + 1) + ": emit references unknown type " + std::to_string(id));
      if (count == 0) throw parse_error("line " + std::to_string(li + 1) + ": zero count");
      emits.push_back({it->second, count});
    } else if (kw == "tail") {
      std::string list;
      is >> list;
      std::string rest;
      if (list.empty() || (is >> rest))
        throw parse_error("line " + std::to_string(li + 1) + ": expected 'tail <id list>'");
      if (saw_tail) throw parse_error("line " + std::to_string(li + 1) + ": second tail record");
      saw_tail = true;
      size_t p = 0;
      while (p <= list.size()) {
        size_t c = list.find(',', p);
        std::string item = list.substr(p, c == std::string::npos ? std::string::npos : c - p);
        uint64_t id = to_number(item, li + 1, "type id");
        auto it = id_to_index.find(id);
        if (it == id_to_index.end())
          throw parse_error("line " + std::to_string(li + 1) + ": tail references unknown type " +
                            std::to_string(id));
        tail_ids.push_back(it->second);
        if (c == std::string::npos) break;
        p = c + 1;
      }
    } else {
      throw parse_error("line " + std::to_string(li + 1) + ": unknown record '" + kw + "'");
    }
  }
  if (emits.empty() && tail_ids.empty()) throw parse_error("block spec emits nothing");
  return make(std::move(types), std::move(emits), std::move(tail_ids));
}

BlockSpec BlockSpec::make(std::vector<FiniteStructure> types, std::vector<Emit> emits,
                          std::vector<uint64_t> tail_types) {
  BlockSpec s;
  for (const auto& t : types) {
    if (t.size() == 0) throw std::invalid_argument("empty block type");
    if (!t.is_function_closed()) throw std::invalid_argument("block type not function-closed");
  }
  s.types_ = std::move(types);
  for (const Emit& e : emits) {
    if (e.type_id >= s.types_.size()) throw std::invalid_argument("emit references unknown type");
    for (uint64_t i = 0; i < e.count; ++i) s.seq_.push_back(e.type_id);
  }
  uint64_t off = 0;
  for (uint64_t t : s.seq_) {
    s.offsets_.push_back(off);
    off += s.types_[t].size();
  }
  s.header_len_ = off;
  for (uint64_t t : tail_types) {
    if (t >= s.types_.size()) throw std::invalid_argument("tail references unknown type");
    s.tail_offsets_.push_back(s.tail_len_);
    s.tail_len_ += s.types_[t].size();
  }
  s.tail_ = std::move(tail_types);
  if (s.seq_.empty() && s.tail_.empty()) throw std::invalid_argument("block spec emits nothing");
  return s;
}

std::pair<uint64_t, uint64_t> BlockSpec::locate(uint64_t x) const {
  if (x < header_len_) {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), x);
    uint64_t idx = uint64_t(it - offsets_.begin()) - 1;
    return {seq_[idx], offsets_[idx]};
  }
  if (tail_.empty()) throw std::out_of_range("position beyond block layout");
  uint64_t rel = (x - header_len_) % tail_len_;
  uint64_t cycle = (x - header_len_) / tail_len_;
  auto it = std::upper_bound(tail_offsets_.begin(), tail_offsets_.end(), rel);
  uint64_t idx = uint64_t(it - tail_offsets_.begin()) - 1;
  return {tail_[idx], header_len_ + cycle * tail_len_ + tail_offsets_[idx]};
}

uint64_t BlockSpec::value(uint64_t x) const {
  auto [t, start] = locate(x);
  return start + types_[t].fvals[x - start];
}

uint64_t BlockSpec::cp(uint64_t x) const {
  auto [t, start] = locate(x);
  uint64_t rel = x - start, n = 0;
  for (uint64_t v : types_[t].fvals)
    if (v == rel) ++n;
  return n;
}

Block BlockSpec::block_at(uint64_t x) const {
  auto [t, start] = locate(x);
  return Block{{start, start + types_[t].size() - 1}, types_[t]};
}

std::string BlockSpec::to_text() const {
  std::ostringstream os;
  for (size_t i = 0; i < types_.size(); ++i) {
    os << "type " << i << " fvals=";
    for (size_t k = 0; k < types_[i].fvals.size(); ++k) {
      if (k) os << ',';
      os << types_[i].fvals[k];
    }
    os << '\n';
  }
  // run-length the emit sequence
  for (size_t i = 0; i < seq_.size();) {
    size_t j = i;
    while (j < seq_.size() && seq_[j] == seq_[i]) ++j;
    os << "emit " << seq_[i] << " x" << (j - i) << '\n';
    i = j;
  }
  if (!tail_.empty()) {
    os << "tail ";
    for (size_t i = 0; i < tail_.size(); ++i) {
      if (i) os << ',';
      os << tail_[i];
    }
    os << '\n';
  }
  return os.str();
}

// --- BlockFunction / CpOracle -------------------------------------------

BlockFunction BlockFunction::from_spec(BlockSpec spec) {
  BlockFunction f;
  f.src_ = std::move(spec);
  return f;
}

BlockFunction BlockFunction::from_values(std::vector<uint64_t> values) {
  BlockFunction f;
  f.src_ = std::move(values);
  return f;
}

BlockFunction BlockFunction::from_program(Program p, uint64_t eval_budget) {
  BlockFunction f;
  f.src_ = std::make_pair(std::move(p), eval_budget);
  return f;
}

std::optional<uint64_t> BlockFunction::value(uint64_t x) const {
  if (const auto* s = std::get_if<BlockSpec>(&src_)) {
    if (!s->has_tail() && x >= s->header_length()) return std::nullopt;
    return s->value(x);
  }
  if (const auto* v = std::get_if<std::vector<uint64_t>>(&src_)) {
    if (x >= v->size()) return std::nullopt;
    return (*v)[x];
  }
  const auto& [p, budget] = std::get<std::pair<Program, uint64_t>>(src_);
  EvalResult r = evaluate(p, x, budget);
  if (!r.halted) return std::nullopt;
  return r.value;
}

uint64_t BlockFunction::defined_length() const {
  if (const auto* s = std::get_if<BlockSpec>(&src_))
    return s->has_tail() ? UINT64_MAX : s->header_length();
  if (const auto* v = std::get_if<std::vector<uint64_t>>(&src_)) return v->size();
  return UINT64_MAX;  // program: assumed total, budget may still bite
}

CpOracle CpOracle::from_spec(const BlockSpec& spec) {
  CpOracle o;
  o.src_ = spec;
  return o;
}

CpOracle CpOracle::from_program(Program cp, uint64_t eval_budget) {
  CpOracle o;
  o.src_ = std::make_pair(std::move(cp), eval_budget);
  return o;
}

CpOracle CpOracle::brute_force(const BlockFunction& f, uint64_t n) {
  CpOracle o;
  o.src_ = Brute{&f, n};
  return o;
}

std::optional<uint64_t> CpOracle::query(uint64_t x) const {
  if (const auto* s = std::get_if<BlockSpec>(&src_)) {
    if (!s->has_tail() && x >= s->header_length()) return std::nullopt;
    return s->cp(x);
  }
  if (const auto* pb = std::get_if<std::pair<Program, uint64_t>>(&src_)) {
    EvalResult r = evaluate(pb->first, x, pb->second);
    if (!r.halted) return std::nullopt;
    return r.value;
  }
  const Brute& b = std::get<Brute>(src_);
  uint64_t n = 0;
  for (uint64_t y = 0; y < b.n; ++y) {
    auto v = b.f->value(y);
    if (!v) return std::nullopt;
    if (*v == x) ++n;
  }
  return n;
}

// --- preimage closure / find_block ---------------------------------------

namespace {

// Memoizing evaluation context charging a shared budget.
struct EvalCtx {
  const BlockFunction& f;
  const CpOracle& cp;
  uint64_t budget;
  bool exhausted = false;
  std::unordered_map<uint64_t, uint64_t> fmemo;
  std::unordered_map<uint64_t, uint64_t> cpmemo;

  bool charge() {
    if (budget == 0) { exhausted = true; return false; }
    --budget;
    return true;
  }
  std::optional<uint64_t> fval(uint64_t x) {
    auto it = fmemo.find(x);
    if (it != fmemo.end()) return it->second;
    if (!charge()) return std::nullopt;
    auto v = f.value(x);
    if (!v) { exhausted = true; return std::nullopt; }
    fmemo.emplace(x, *v);
    return v;
  }
  std::optional<uint64_t> cpval(uint64_t x) {
    auto it = cpmemo.find(x);
    if (it != cpmemo.end()) return it->second;
    if (!charge()) return std::nullopt;
    auto v = cp.query(x);
    if (!v) { exhausted = true; return std::nullopt; }
    cpmemo.emplace(x, *v);
    return v;
  }
};

// Union P_f(x) into `into`; returns false on exhaustion.
bool preimage_close_into(EvalCtx& ctx, uint64_t x, std::set<uint64_t>& into) {
  std::vector<uint64_t> work;
  if (into.insert(x).second) work.push_back(x);
  while (!work.empty()) {
    uint64_t z = work.back();
    work.pop_back();
    auto k = ctx.cpval(z);
    if (!k) return false;
    uint64_t found = 0;
    for (uint64_t y = 0; found < *k; ++y) {
      auto v = ctx.fval(y);
      if (!v) return false;
      if (*v == z) {
        ++found;
        if (into.insert(y).second) work.push_back(y);
      }
    }
  }
  return true;
}

}  // namespace

PreimageClosureResult preimage_closure(const BlockFunction& f, const CpOracle& cp,
                                       uint64_t x, uint64_t budget) {
  EvalCtx ctx{f, cp, budget, false, {}, {}};
  std::set<uint64_t> s;
  PreimageClosureResult r;
  if (!preimage_close_into(ctx, x, s)) {
    r.exhausted = true;
    return r;
  }
  r.set.assign(s.begin(), s.end());
  return r;
}

FindBlockResult find_block(const BlockFunction& f, const CpOracle& cp, uint64_t x,
                           uint64_t budget, uint64_t ceiling) {
  // Every growth step below adds only elements of the true block containing x
  // (preimage closures of its members, gap fills between them, forward images,
  // and left-complement witnesses all live inside it), so on exit the
  // accumulated set *is* that block: a closed gap-free interval with closed
  // left complement is automatically minimal once it contains x's closure.
  EvalCtx ctx{f, cp, budget, false, {}, {}};
  FindBlockResult res;
  std::set<uint64_t> s;
  if (!preimage_close_into(ctx, x, s)) return res;  // Exhausted

  for (;;) {
    if (s.size() > ceiling) {
      res.kind = FindBlockResult::Kind::NotABlock;
      return res;
    }
    uint64_t m = *s.begin(), M = *s.rbegin();

    // gap fill: least missing y strictly between min and max
    std::optional<uint64_t> gap;
    {
      uint64_t expect = m;
      for (uint64_t v : s) {
        if (v != expect) { gap = expect; break; }
        ++expect;
      }
    }
    if (gap) {
      if (!preimage_close_into(ctx, *gap, s)) return res;
      continue;
    }

    // forward closure: least member whose image escapes
    bool grew = false;
    for (uint64_t v : s) {
      auto img = ctx.fval(v);
      if (!img) return res;
      if (!s.count(*img)) {
        if (!preimage_close_into(ctx, *img, s)) return res;
        grew = true;
        break;
      }
    }
    if (grew) continue;

    // left complement [0, m) must be f-closed: values stay below m and every
    // preimage of a point below m lies below m (single pass + cp totals).
    std::vector<uint64_t> counts(m, 0);
    std::optional<uint64_t> witness;
    for (uint64_t y = 0; y < m; ++y) {
      auto v = ctx.fval(y);
      if (!v) return res;
      if (*v >= m) { witness = y; break; }
      ++counts[*v];
    }
    if (!witness) {
      for (uint64_t z = 0; z < m; ++z) {
        auto k = ctx.cpval(z);
        if (!k) return res;
        if (*k != counts[z]) { witness = z; break; }
      }
    }
    if (witness) {
      if (!preimage_close_into(ctx, *witness, s)) return res;
      continue;
    }

    Block b;
    b.interval = {m, M};
    b.shape.fvals.resize(M - m + 1);
    for (uint64_t v = m; v <= M; ++v) {
      auto img = ctx.fval(v);
      if (!img) return res;
      b.shape.fvals[v - m] = *img - m;
    }
    res.kind = FindBlockResult::Kind::Ok;
    res.block = std::move(b);
    return res;
  }
}

// --- decompose / classify -------------------------------------------------

namespace {

struct PrefixTable {
  std::vector<uint64_t> vals;
  std::optional<DecomposeFailure> failure;
};

PrefixTable read_prefix(const BlockFunction& f, uint64_t n) {
  PrefixTable t;
  t.vals.reserve(n);
  for (uint64_t x = 0; x < n; ++x) {
    auto v = f.value(x);
    if (!v) {
      t.failure = DecomposeFailure{DecomposeFailure::Reason::NoMinimalClosure, x};
      return t;
    }
    if (*v >= n) {
      t.failure = DecomposeFailure{DecomposeFailure::Reason::EscapesPrefix, x};
      return t;
    }
    t.vals.push_back(*v);
  }
  return t;
}

}  // namespace

DecomposeResult decompose_prefix(const BlockFunction& f, uint64_t n) {
  DecomposeResult out;
  PrefixTable t = read_prefix(f, n);
  if (t.failure) {
    out.failure = t.failure;
    return out;
  }
  const auto& vals = t.vals;

  // preimage lists bucketed by value, each ascending
  std::vector<uint64_t> cnt(n, 0), offs(n + 1, 0), pre(n);
  for (uint64_t v : vals) ++cnt[v];
  for (uint64_t z = 0; z < n; ++z) offs[z + 1] = offs[z] + cnt[z];
  {
    std::vector<uint64_t> cursor(offs.begin(), offs.end() - 1);
    for (uint64_t y = 0; y < n; ++y) pre[cursor[vals[y]]++] = y;
  }

  uint64_t start = 0;
  while (start < n) {
    uint64_t hi = start;
    for (uint64_t p = start; p <= hi; ++p) {
      uint64_t v = vals[p];
      assert(v >= start && "value falls into a previously closed block");
      if (v > hi) hi = v;
      if (cnt[p] > 0) {
        uint64_t ymax = pre[offs[p] + cnt[p] - 1];
        if (ymax > hi) hi = ymax;
      }
    }
    Block b;
    b.interval = {start, hi};
    b.shape.fvals.assign(vals.begin() + long(start), vals.begin() + long(hi) + 1);
    for (auto& v : b.shape.fvals) v -= start;
    out.blocks.push_back(std::move(b));
    start = hi + 1;
  }
  return out;
}

uint64_t cp_bounded(const BlockFunction& f, uint64_t x, uint64_t n) {
  uint64_t c = 0;
  for (uint64_t y = 0; y < n; ++y) {
    auto v = f.value(y);
    if (!v) throw budget_error("cp_bounded: f undefined at " + std::to_string(y));
    if (*v == x) ++c;
  }
  return c;
}

PrefixClassification classify_prefix(const BlockFunction& f, uint64_t n) {
  PrefixClassification c;
  std::vector<uint64_t> vals;
  vals.reserve(n);
  for (uint64_t x = 0; x < n; ++x) {
    auto v = f.value(x);
    if (!v) throw budget_error("classify_prefix: f undefined at " + std::to_string(x));
    vals.push_back(*v);
  }

  std::unordered_map<uint64_t, uint64_t> freq;
  uint64_t best = 0, best_count = 0;
  for (uint64_t x = 0; x < n; ++x) {
    uint64_t k = ++freq[vals[x]];
    if (k > best_count || (k == best_count && vals[x] < best)) {
      best = vals[x];
      best_count = k;
    }
    if (vals[x] != x) ++c.identity_exceptions;
  }
  c.constant_value = n ? best : 0;
  c.constant_exceptions = n - best_count;

  DecomposeResult d = decompose_prefix(f, n);
  c.block_on_prefix = d.ok();
  c.block_failure = d.failure;

  // f-closed initial segments [0,k): prefix max stays below k, suffix min at or above k
  std::vector<uint64_t> sufmin(n + 1, UINT64_MAX);
  for (uint64_t i = n; i > 0; --i) sufmin[i - 1] = std::min(sufmin[i], vals[i - 1]);
  uint64_t prefmax = 0;
  for (uint64_t k = 1; k <= n; ++k) {
    prefmax = std::max(prefmax, vals[k - 1]);
    if (prefmax < k && sufmin[k] >= k) c.closed_initial_segment_lengths.push_back(k);
  }
  return c;
}

uint64_t BlockTypeCatalog::update(const Block& b) {
  for (const Entry& e : entries_)
    for (const Interval& occ : e.occurrences)
      if (!(b.interval.hi < occ.lo || occ.hi < b.interval.lo))
        throw std::invalid_argument("catalog update overlaps an existing occurrence");
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (structures_isomorphic(entries_[i].shape, b.shape)) {
      entries_[i].occurrences.push_back(b.interval);
      return i;
    }
  }
  entries_.push_back({b.shape, {b.interval}});
  return entries_.size() - 1;
}

}  // namespace spectra
