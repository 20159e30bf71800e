#include "spectra/notation.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "spectra/copies.hpp"  // structure_error

namespace spectra {

std::string code_to_string(uint64_t code) {
  // strings of length L occupy codes [2^L - 1, 2^{L+1} - 1)
  uint64_t len = 0;
  while (((uint64_t(1) << (len + 1)) - 1) <= code) ++len;
  uint64_t offset = code - ((uint64_t(1) << len) - 1);
  std::string s(len, 'a');
  for (uint64_t i = 0; i < len; ++i)
    if (offset & (uint64_t(1) << (len - 1 - i))) s[i] = 'b';
  return s;
}

uint64_t string_to_code(std::string_view s) {
  if (s.size() >= 60) throw parse_error("notation string too long");
  uint64_t offset = 0;
  for (char c : s) {
    if (c != 'a' && c != 'b') throw parse_error(std::string("bad notation character '") + c + "'");
    offset = offset * 2 + (c == 'b');
  }
  return ((uint64_t(1) << s.size()) - 1) + offset;
}

NotationBundle NotationBundle::parse(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  enum class Sect { Hint, Forward, Backward, DoneF, DoneB } state = Sect::Hint;
  NotationBundle b;
  std::string fwd, bwd;
  bool have_hint = false;
  while (std::getline(is, line)) {
    std::string stripped = line;
    size_t hash = stripped.find('#');
    if (hash != std::string::npos) stripped = stripped.substr(0, hash);
    size_t beg = stripped.find_first_not_of(" \t\r");
    if (beg == std::string::npos) continue;
    size_t end = stripped.find_last_not_of(" \t\r");
    stripped = stripped.substr(beg, end - beg + 1);

    if (stripped.rfind("HINT", 0) == 0) {
      if (state != Sect::Hint || have_hint) throw parse_error("misplaced HINT");
      std::istringstream hs(stripped.substr(4));
      std::string tok;
      hs >> tok;
      if (tok.rfind("n=", 0) != 0) throw parse_error("HINT wants n=<k>");
      b.hint_n = 0;
      for (char c : tok.substr(2)) {
        if (c < '0' || c > '9') throw parse_error("bad HINT value");
        b.hint_n = b.hint_n * 10 + uint64_t(c - '0');
      }
      have_hint = true;
      continue;
    }
    if (stripped == "FORWARD") {
      if (state != Sect::Hint) throw parse_error("misplaced FORWARD");
      state = Sect::Forward;
      continue;
    }
    if (stripped == "BACKWARD") {
      if (state != Sect::Forward) throw parse_error("misplaced BACKWARD");
      state = Sect::Backward;
      continue;
    }
    if (state == Sect::Forward)
      fwd += stripped + '\n';
    else if (state == Sect::Backward)
      bwd += stripped + '\n';
    else
      throw parse_error("line outside any section: " + stripped);
  }
  if (state != Sect::Backward) throw parse_error("bundle lacks FORWARD/BACKWARD sections");
  b.forward = Program::parse(fwd);
  b.backward = Program::parse(bwd);
  return b;
}

std::string NotationBundle::to_text() const {
  std::ostringstream os;
  os << "HINT n=" << hint_n << "\nFORWARD\n" << forward.to_text() << "BACKWARD\n"
     << backward.to_text();
  return os.str();
}

bool preimage_less(const Program& backward, uint64_t c1, uint64_t c2, uint64_t budget) {
  auto value_of = [&](uint64_t code) {
    EvalResult r = evaluate(backward, code, budget);
    if (!r.halted)
      throw budget_error("backward program exhausted its budget on code " + std::to_string(code));
    if (r.value == 0)
      throw structure_error("code " + std::to_string(code) + " is off the notation set");
    return r.value - 1;
  };
  return value_of(c1) < value_of(c2);
}

CanonicalEnumeration canonical_enumeration(const Program& backward, uint64_t n,
                                           uint64_t horizon, uint64_t budget) {
  CanonicalEnumeration e;
  for (uint64_t code = 0; code < horizon && e.codes.size() < n; ++code) {
    EvalResult r = evaluate(backward, code, budget);
    if (!r.halted)
      throw budget_error("backward program exhausted its budget on code " + std::to_string(code));
    if (r.value == 0) continue;
    e.codes.push_back(code);
    e.values.push_back(r.value - 1);
  }
  if (e.codes.size() < n)
    throw budget_error("horizon exhausted with only " + std::to_string(e.codes.size()) +
                       " notations found");
  std::vector<bool> seen(n, false);
  for (uint64_t v : e.values) {
    if (v >= n) throw structure_error("notation denotes " + std::to_string(v) + " >= n");
    if (seen[v]) throw structure_error("value " + std::to_string(v) + " has two notations");
    seen[v] = true;
  }
  return e;
}

AcceptabilityVerdict verify_acceptability(const CanonicalEnumeration& e, const Program& succ,
                                          uint64_t budget) {
  uint64_t n = e.codes.size();
  std::vector<uint64_t> code_of(n, 0);
  for (uint64_t i = 0; i < n; ++i) code_of[e.values[i]] = e.codes[i];
  for (uint64_t v = 0; v + 1 < n; ++v) {
    EvalResult r = evaluate(succ, code_of[v], budget);
    if (!r.halted || r.value != code_of[v + 1]) return {false, v};
  }
  return {true, std::nullopt};
}

std::vector<uint64_t> shapiro_translate(const Program& succ,
                                        const std::vector<uint64_t>& notation_codes,
                                        uint64_t budget) {
  std::set<uint64_t> codes(notation_codes.begin(), notation_codes.end());
  if (codes.size() != notation_codes.size())
    throw structure_error("notation set lists a code twice");
  if (codes.empty()) return {};

  std::unordered_map<uint64_t, uint64_t> succ_of;
  std::unordered_set<uint64_t> image;
  for (uint64_t c : codes) {
    EvalResult r = evaluate(succ, c, budget);
    if (!r.halted)
      throw budget_error("successor program exhausted its budget on code " + std::to_string(c));
    succ_of[c] = r.value;
    image.insert(r.value);
  }
  std::optional<uint64_t> generator;
  for (uint64_t c : codes) {
    if (image.count(c)) continue;
    if (generator) throw structure_error("successor leaves two candidate zeros");
    generator = c;
  }
  if (!generator) throw structure_error("successor has no candidate zero");

  std::vector<uint64_t> by_value;
  std::unordered_set<uint64_t> visited;
  uint64_t cur = *generator;
  while (by_value.size() < codes.size()) {
    if (!codes.count(cur)) throw structure_error("successor chain leaves the notation set");
    if (!visited.insert(cur).second) throw structure_error("successor chain loops early");
    by_value.push_back(cur);
    if (by_value.size() < codes.size()) cur = succ_of[cur];
  }
  return by_value;
}

ClassifierVerdict everywhere_computable_classifier(const std::vector<uint64_t>& values) {
  ClassifierVerdict v;
  uint64_t n = values.size();
  std::unordered_map<uint64_t, uint64_t> freq;
  uint64_t best = 0, best_count = 0, id_hits = 0;
  bool charac = true;
  uint64_t ones = 0;
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t k = ++freq[values[i]];
    if (k > best_count || (k == best_count && values[i] < best)) {
      best = values[i];
      best_count = k;
    }
    if (values[i] == i) ++id_hits;
    if (values[i] > 1) charac = false;
    if (values[i] == 1) ++ones;
  }
  uint64_t threshold = n / 4;
  uint64_t const_exceptions = n - best_count;
  uint64_t id_exceptions = n - id_hits;
  if (const_exceptions <= threshold) {
    v.shape = ClassifierVerdict::FunctionShape::AlmostConstant;
    v.constant_value = best;
    v.exceptions = const_exceptions;
  } else if (id_exceptions <= threshold) {
    v.shape = ClassifierVerdict::FunctionShape::AlmostIdentity;
    v.exceptions = id_exceptions;
  } else {
    v.shape = ClassifierVerdict::FunctionShape::Mixed;
    v.exceptions = std::min(const_exceptions, id_exceptions);
  }
  v.is_characteristic = charac;
  if (charac) {
    if (ones <= threshold)
      v.set_shape = ClassifierVerdict::SetShape::Finite;
    else if (n - ones <= threshold)
      v.set_shape = ClassifierVerdict::SetShape::Cofinite;
    else
      v.set_shape = ClassifierVerdict::SetShape::Balanced;
  }
  return v;
}

}  // namespace spectra
