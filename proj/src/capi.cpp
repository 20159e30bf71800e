#include "spectra.h"

#include <cstring>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectra/blocks.hpp"
#include "spectra/copies.hpp"
#include "spectra/injury.hpp"
#include "spectra/machine.hpp"
#include "spectra/notation.hpp"
#include "spectra/recovery.hpp"

struct spectra_result {
  std::string records;
  std::string summary;
};

namespace {

using namespace spectra;

thread_local std::string g_error;

struct arg_error : std::runtime_error {
  explicit arg_error(const std::string& what) : std::runtime_error(what) {}
};

int fail(int code, const std::string& msg) {
  g_error = msg;
  return code;
}

template <typename Fn>
int guarded(spectra_result** out, Fn&& fn) {
  if (!out) return fail(SPECTRA_ERR_ARG, "null result out-pointer");
  *out = nullptr;
  try {
    return fn();
  } catch (const arg_error& e) {
    return fail(SPECTRA_ERR_ARG, e.what());
  } catch (const parse_error& e) {
    return fail(SPECTRA_ERR_PARSE, e.what());
  } catch (const budget_error& e) {
    return fail(SPECTRA_ERR_BUDGET, e.what());
  } catch (const structure_error& e) {
    return fail(SPECTRA_ERR_STRUCTURE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SPECTRA_ERR_STRUCTURE, e.what());
  } catch (const std::out_of_range& e) {
    return fail(SPECTRA_ERR_STRUCTURE, e.what());
  } catch (const std::exception& e) {
    return fail(SPECTRA_ERR_INTERNAL, e.what());
  }
}

int finish(spectra_result** out, std::ostringstream& rec, const std::string& summary) {
  *out = new spectra_result{rec.str(), summary};
  g_error.clear();
  return SPECTRA_OK;
}

uint64_t step_budget(uint64_t budget) { return budget ? budget : 10000; }

std::string csv(const std::vector<uint64_t>& v) {
  if (v.empty()) return "-";
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

// Exactly one of the two texts supplies f.
BlockFunction load_function(const char* spec_text, const char* program_text, uint64_t budget) {
  if ((spec_text != nullptr) == (program_text != nullptr))
    throw arg_error("pass exactly one of spec text and program text");
  if (spec_text) return BlockFunction::from_spec(BlockSpec::parse(spec_text));
  return BlockFunction::from_program(Program::parse(program_text), step_budget(budget));
}

// `program <name>` headers with instruction lines below each.
std::vector<Program> parse_catalog(std::string_view text, std::vector<std::string>* names) {
  std::vector<Program> progs;
  std::istringstream is{std::string(text)};
  std::string line, body;
  bool open = false;
  auto flush = [&] {
    if (open) progs.push_back(Program::parse(body));
    body.clear();
  };
  while (std::getline(is, line)) {
    std::string stripped = line.substr(0, line.find('#'));
    size_t beg = stripped.find_first_not_of(" \t\r");
    if (beg == std::string::npos) continue;
    size_t end = stripped.find_last_not_of(" \t\r");
    stripped = stripped.substr(beg, end - beg + 1);
    if (stripped.rfind("program", 0) == 0 &&
        (stripped.size() == 7 || stripped[7] == ' ' || stripped[7] == '\t')) {
      flush();
      open = true;
      if (names) {
        size_t nb = stripped.find_first_not_of(" \t", 7);
        names->push_back(nb == std::string::npos ? "" : stripped.substr(nb));
      }
      continue;
    }
    if (!open) throw parse_error("catalog line outside any `program` entry: " + stripped);
    body += stripped + '\n';
  }
  flush();
  return progs;
}

// `at <stage> add <element>` lines.
std::vector<std::pair<uint64_t, uint64_t>> parse_wset(std::string_view text) {
  std::vector<std::pair<uint64_t, uint64_t>> entries;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string at, add;
    uint64_t stage = 0, element = 0;
    if (!(ls >> at)) continue;
    if (at != "at" || !(ls >> stage >> add) || add != "add" || !(ls >> element))
      throw parse_error("bad entry-schedule line: " + line);
    std::string rest;
    if (ls >> rest) throw parse_error("trailing tokens on entry-schedule line: " + line);
    entries.emplace_back(element, stage);
  }
  return entries;
}

void emit_copy_log(std::ostringstream& rec, const CopySession& s) {
  std::istringstream is(s.log_text());
  std::string line;
  while (std::getline(is, line)) rec << "copy " << line << '\n';
}

const char* status_word(FiniteInjuryReport::Status s) {
  switch (s) {
    case FiniteInjuryReport::Status::Idle: return "idle";
    case FiniteInjuryReport::Status::Waiting: return "waiting";
    case FiniteInjuryReport::Status::ActedCp2: return "acted-cp2";
    case FiniteInjuryReport::Status::SettledCp1: return "settled-cp1";
  }
  return "?";
}

const char* state_word(SlotRecord::State s) {
  switch (s) {
    case SlotRecord::State::ChooseBlocks: return "choose-blocks";
    case SlotRecord::State::WatchZero: return "watch-zero";
    case SlotRecord::State::WatchOne: return "watch-one";
    case SlotRecord::State::WaitXi: return "wait-xi";
    case SlotRecord::State::Done: return "done";
  }
  return "?";
}

std::string addr_or_dash(const std::string& a) { return a.empty() ? "-" : a; }

}  // namespace

extern "C" {

const char* spectra_result_records(const spectra_result* r) {
  return r ? r->records.c_str() : "";
}

const char* spectra_result_summary(const spectra_result* r) {
  return r ? r->summary.c_str() : "";
}

void spectra_result_free(spectra_result* r) { delete r; }

const char* spectra_last_error(void) { return g_error.c_str(); }

int spectra_decompose(const char* spec_text, const char* program_text, uint64_t n,
                      uint64_t budget, spectra_result** out) {
  return guarded(out, [&] {
    BlockFunction f = load_function(spec_text, program_text, budget);
    DecomposeResult d = decompose_prefix(f, n);
    if (!d.ok()) {
      const DecomposeFailure& df = *d.failure;
      const char* word = df.reason == DecomposeFailure::Reason::EscapesPrefix
                             ? "escapes-prefix"
                             : "no-minimal-closure";
      return fail(SPECTRA_ERR_STRUCTURE, std::string("prefix fails to decompose: ") + word +
                                             " at position " + std::to_string(df.position));
    }
    BlockTypeCatalog cat;
    std::ostringstream rec;
    for (size_t i = 0; i < d.blocks.size(); ++i) {
      uint64_t t = cat.update(d.blocks[i]);
      rec << "piece " << i << ' ' << d.blocks[i].interval.lo << ' ' << d.blocks[i].interval.hi
          << " type " << t << '\n';
    }
    for (size_t t = 0; t < cat.entries().size(); ++t) {
      const auto& e = cat.entries()[t];
      rec << "catalog " << t << " size " << e.shape.fvals.size() << " fvals "
          << csv(e.shape.fvals) << " occurrences " << e.occurrences.size() << '\n';
    }
    rec << "verdict ok pieces " << d.blocks.size() << '\n';
    std::ostringstream sum;
    sum << "[0," << n << ") splits into " << d.blocks.size() << " blocks of "
        << cat.entries().size() << " types.";
    return finish(out, rec, sum.str());
  });
}

int spectra_classify(const char* spec_text, const char* program_text, uint64_t n,
                     uint64_t budget, spectra_result** out) {
  return guarded(out, [&] {
    BlockFunction f = load_function(spec_text, program_text, budget);
    std::vector<uint64_t> values(n);
    for (uint64_t x = 0; x < n; ++x) {
      std::optional<uint64_t> v = f.value(x);
      if (!v) throw budget_error("f undefined at " + std::to_string(x));
      values[x] = *v;
    }
    ClassifierVerdict cv = everywhere_computable_classifier(values);
    PrefixClassification pc = classify_prefix(f, n);

    std::ostringstream rec;
    switch (cv.shape) {
      case ClassifierVerdict::FunctionShape::AlmostConstant:
        rec << "shape almost-constant " << cv.constant_value;
        break;
      case ClassifierVerdict::FunctionShape::AlmostIdentity:
        rec << "shape almost-identity";
        break;
      case ClassifierVerdict::FunctionShape::Mixed:
        rec << "shape mixed";
        break;
    }
    rec << " exceptions " << cv.exceptions << '\n';
    rec << "characteristic " << (cv.is_characteristic ? 1 : 0) << '\n';
    if (cv.is_characteristic) {
      const char* w = cv.set_shape == ClassifierVerdict::SetShape::Finite     ? "finite"
                      : cv.set_shape == ClassifierVerdict::SetShape::Cofinite ? "cofinite"
                                                                              : "balanced";
      rec << "set-shape " << w << '\n';
    }
    rec << "constant " << pc.constant_value << " exceptions " << pc.constant_exceptions << '\n';
    rec << "identity exceptions " << pc.identity_exceptions << '\n';
    rec << "block-prefix " << (pc.block_on_prefix ? 1 : 0) << '\n';
    if (pc.block_failure) {
      const char* word = pc.block_failure->reason == DecomposeFailure::Reason::EscapesPrefix
                             ? "escapes-prefix"
                             : "no-minimal-closure";
      rec << "block-failure " << word << ' ' << pc.block_failure->position << '\n';
    }
    rec << "closed-segments " << csv(pc.closed_initial_segment_lengths) << '\n';
    rec << "verdict ok\n";

    std::ostringstream sum;
    const char* shape_word = cv.shape == ClassifierVerdict::FunctionShape::AlmostConstant
                                 ? "almost-constant"
                             : cv.shape == ClassifierVerdict::FunctionShape::AlmostIdentity
                                 ? "almost-identity"
                                 : "mixed";
    sum << "On [0," << n << ") f is " << shape_word << " (" << cv.exceptions << " exceptions)"
        << (pc.block_on_prefix ? ", and the prefix decomposes into blocks." :
                                 ", and the prefix is not a block prefix.");
    return finish(out, rec, sum.str());
  });
}

int spectra_recover(const char* spec_text, const char* schedule_text, uint64_t x,
                    uint64_t stages, uint64_t budget, spectra_result** out) {
  return guarded(out, [&] {
    if (!spec_text || !schedule_text)
      throw arg_error("recover wants a block spec and a copy schedule");
    BlockSpec spec = BlockSpec::parse(spec_text);
    uint64_t window = spec.header_length() + 2 * spec.tail_length();
    BlockFunction f = BlockFunction::from_spec(spec);
    Program sched = Program::parse(schedule_text);
    uint64_t b = step_budget(budget);
    CopySession ses = schedule_copy(sched, stages, b);
    CopyOracle oracle(ses, f);
    SegmentSequence segs = unique_segments(f, window);
    if (segs.lengths.empty())
      throw structure_error("no uniquely embeddable initial segments below " +
                            std::to_string(window));
    RecoverResult r = recover_successor(oracle, segs, x, b);

    std::ostringstream rec;
    emit_copy_log(rec, ses);
    rec << "window " << window << " segments " << csv(segs.lengths) << '\n';
    for (const std::string& line : r.trace) rec << line << '\n';
    rec << "queries " << r.queries_used << '\n';
    if (r.kind != RecoverResult::Kind::Ok)
      return fail(SPECTRA_ERR_BUDGET, "query budget exhausted after " +
                                          std::to_string(r.queries_used) + " queries");
    rec << "successor " << r.successor << '\n' << "verdict ok\n";
    std::ostringstream sum;
    sum << "Successor of " << x << " is " << r.successor << " (" << r.queries_used
        << " oracle queries).";
    return finish(out, rec, sum.str());
  });
}

int spectra_injury_finite(const char* catalog_text, uint64_t stages, uint64_t max_length,
                          spectra_result** out) {
  return guarded(out, [&] {
    std::vector<std::string> names;
    std::vector<Program> catalog =
        catalog_text ? parse_catalog(catalog_text, &names) : std::vector<Program>{};
    FiniteInjuryOptions opt;
    opt.stages = stages;
    if (max_length) opt.max_length = max_length;
    FiniteInjuryReport rep = run_finite_injury(catalog, opt);

    std::ostringstream rec;
    rec << "stages-run " << rep.stages_run << '\n';
    rec << "length " << rep.fvals.size() << '\n';
    for (size_t i = 0; i < rep.fvals.size(); i += 64) {
      std::vector<uint64_t> chunk(rep.fvals.begin() + i,
                                  rep.fvals.begin() + std::min(rep.fvals.size(), i + 64));
      rec << "f " << i << ' ' << csv(chunk) << '\n';
    }
    for (size_t i = 0; i < rep.requirements.size(); ++i) {
      const auto& r = rep.requirements[i];
      rec << "requirement " << i;
      if (i < names.size() && !names[i].empty()) rec << " name " << names[i];
      rec << " status " << status_word(r.status) << " witness " << r.witness << " cycle "
          << r.cycle_len << " value " << r.phi_value << " injuries " << r.injuries
          << " settled " << r.settled_stage << '\n';
    }
    for (size_t t = 0; t < rep.known_types.size(); ++t)
      rec << "type " << t << " size " << rep.known_types[t].fvals.size() << " fvals "
          << csv(rep.known_types[t].fvals) << '\n';
    for (const std::string& line : rep.log) rec << "note " << line << '\n';
    rec << "verdict ok\n";

    std::ostringstream sum;
    sum << "Ran " << rep.stages_run << " stages against " << catalog.size()
        << " programs; f has length " << rep.fvals.size() << " over "
        << rep.known_types.size() << " block types.";
    return finish(out, rec, sum.str());
  });
}

int spectra_injury_tree(const char* spec_text, const char* phi_text, const char* psi_text,
                        const char* wset_text, uint64_t stages, uint64_t m_cap,
                        int pair_rule, spectra_result** out) {
  return guarded(out, [&] {
    if (!spec_text || !phi_text || !psi_text || !wset_text)
      throw arg_error("tree run wants spec, phi, psi and wset texts");
    if (pair_rule != 0 && pair_rule != 1)
      throw arg_error("pair_rule must be 0 (preimage-left) or 1 (leftmost-maps-right)");
    BlockFunction f = BlockFunction::from_spec(BlockSpec::parse(spec_text));
    TreeRequirement req{OracleProgram::parse(phi_text), OracleProgram::parse(psi_text),
                        CeSet::from_schedule(parse_wset(wset_text))};
    TreeOptions opt;
    if (stages) opt.stages = stages;
    if (m_cap) opt.m_cap = m_cap;
    opt.pair_rule = pair_rule == 0 ? PairRule::PreimageLeft : PairRule::LeftmostMapsRight;
    ConstructionReport rep = run_tree_construction(f, {req}, opt);

    std::ostringstream rec;
    rec << "stages-run " << rep.stages_run << '\n';
    rec << "path " << (rep.current_path.empty() ? "-" : rep.current_path) << '\n';
    emit_copy_log(rec, rep.session);
    uint64_t stops = 0, verified = 0;
    for (const NodeRecord& n : rep.nodes) {
      rec << "node " << addr_or_dash(n.address) << " outcome " << n.outcome << " stopped "
          << (n.stopped ? 1 : 0) << " aligned " << n.aligned_len << " slots " << n.slots.size()
          << '\n';
      for (const SlotRecord& s : n.slots) {
        rec << "slot " << addr_or_dash(n.address) << ' ' << s.m << " state "
            << state_word(s.state) << " x " << s.x_name << " y " << s.y_name << " pair "
            << s.pair << " t1 " << s.t1 << " s1 " << s.s1 << " t2 " << s.t2 << " s2 " << s.s2
            << " markers " << s.marker_s1 << ' ' << s.marker_post_insert << ' ' << s.marker_s2
            << ' ' << s.marker_final << '\n';
        if (!s.c_names.empty())
          rec << "cnames " << addr_or_dash(n.address) << ' ' << s.m << ' ' << csv(s.c_names)
              << '\n';
        if (!s.d_names.empty())
          rec << "dnames " << addr_or_dash(n.address) << ' ' << s.m << ' ' << csv(s.d_names)
              << '\n';
        if (s.state == SlotRecord::State::Done) {
          ++stops;
          VerifyOutcome v = verify_stop_witness(rep.session.log_text(), s, req, f);
          if (v.ok) ++verified;
          rec << "verify " << addr_or_dash(n.address) << ' ' << s.m << ' '
              << (v.ok ? "ok" : v.failure) << '\n';
        }
      }
    }
    for (const std::string& line : rep.narration) rec << "note " << line << '\n';
    rec << "verdict ok\n";

    std::ostringstream sum;
    sum << "Ran " << rep.stages_run << " stages; final path " << rep.current_path << "; "
        << stops << " stopped slots, " << verified << " verified.";
    return finish(out, rec, sum.str());
  });
}

int spectra_encode_ce(const char* wset_text, const char* catalog_text, uint64_t stages,
                      spectra_result** out) {
  return guarded(out, [&] {
    CeSet w;
    if (wset_text && catalog_text)
      throw arg_error("pass an entry schedule or a catalog, not both");
    if (wset_text)
      w = CeSet::from_schedule(parse_wset(wset_text));
    else if (catalog_text)
      w = CeSet::halting_set(parse_catalog(catalog_text, nullptr));
    else
      throw arg_error("encode wants an entry schedule or a catalog");
    CeEncoding enc = ce_encoded_copy(w, stages);

    std::ostringstream rec;
    emit_copy_log(rec, enc.session);
    std::vector<uint64_t> members = w.at_stage(stages);
    for (uint64_t e : members) rec << "member " << e << '\n';
    for (size_t e = 0; e < enc.markers.size(); ++e) {
      auto [a, b] = enc.markers[e];
      std::optional<uint64_t> pa = enc.session.position_of(a);
      std::optional<uint64_t> pb = enc.session.position_of(b);
      if (!pa || !pb) throw structure_error("marker pair of " + std::to_string(e) + " missing");
      bool adjacent = *pb == *pa + 1;
      bool in_w = std::find(members.begin(), members.end(), e) != members.end();
      if (adjacent == in_w)
        throw structure_error("marker adjacency disagrees with membership at " +
                              std::to_string(e));
      rec << "marker " << e << " a " << a << " b " << b << " adjacent " << (adjacent ? 1 : 0)
          << " in-w " << (in_w ? 1 : 0) << '\n';
    }
    rec << "verdict ok\n";
    std::ostringstream sum;
    sum << "Encoded " << members.size() << " members over " << enc.markers.size()
        << " marker pairs in " << stages << " stages; copy has "
        << enc.session.size() << " elements.";
    return finish(out, rec, sum.str());
  });
}

int spectra_encode_delta2(const char* approx_text, const char* spec_text, uint64_t stages,
                          spectra_result** out) {
  return guarded(out, [&] {
    if (!approx_text || !spec_text)
      throw arg_error("encode wants an approximation script and a block spec");
    Delta2Approx approx = Delta2Approx::parse(approx_text);
    BlockFunction f = BlockFunction::from_spec(BlockSpec::parse(spec_text));
    Delta2Encoding enc = delta2_encoded_copy(approx, f, stages);
    std::vector<int> bits = delta2_decode(enc, f);

    std::ostringstream rec;
    emit_copy_log(rec, enc.session);
    rec << "settled-by " << approx.settle_stage() << '\n';
    uint64_t agree = 0;
    for (uint64_t e = 0; e < approx.domain(); ++e) {
      int lim = approx.limit(e);
      auto [p, q] = enc.markers[e];
      rec << "marker " << e << " p " << p << " q " << q << " bit " << bits[e] << " limit "
          << lim << '\n';
      if (bits[e] == lim) ++agree;
    }
    if (stages >= approx.settle_stage() && agree != approx.domain())
      throw structure_error("decoded bits disagree with the settled approximation");
    rec << "verdict ok\n";
    std::ostringstream sum;
    sum << "Encoded " << approx.domain() << " bits in " << stages << " stages; " << agree
        << " decoded bits match the limit (approximation settles by stage "
        << approx.settle_stage() << ").";
    return finish(out, rec, sum.str());
  });
}

int spectra_translate(const char* bundle_text, const char* succ_text, uint64_t budget,
                      spectra_result** out) {
  return guarded(out, [&] {
    if (!bundle_text || !succ_text)
      throw arg_error("translate wants a notation bundle and a successor program");
    NotationBundle bundle = NotationBundle::parse(bundle_text);
    Program succ = Program::parse(succ_text);
    uint64_t n = bundle.hint_n;
    uint64_t b = step_budget(budget);
    uint64_t horizon = std::max<uint64_t>(1024, 16 * n);
    CanonicalEnumeration e = canonical_enumeration(bundle.backward, n, horizon, b);
    AcceptabilityVerdict acc = verify_acceptability(e, succ, b);
    std::vector<uint64_t> by_value = shapiro_translate(succ, e.codes, b);

    std::vector<uint64_t> declared(n, 0);
    for (uint64_t i = 0; i < n; ++i) declared[e.values[i]] = e.codes[i];
    uint64_t agree = 0;
    std::ostringstream rec;
    rec << "acceptable " << (acc.ok ? 1 : 0);
    if (!acc.ok) rec << " first-bad " << *acc.first_bad_value;
    rec << '\n';
    for (uint64_t v = 0; v < n; ++v) {
      bool same = by_value[v] == declared[v];
      agree += same;
      rec << "assign " << v << ' ' << by_value[v] << " agrees " << (same ? 1 : 0) << '\n';
    }
    rec << "verdict ok\n";
    std::ostringstream sum;
    sum << "Rebuilt the assignment of " << n << " values from the successor alone; " << agree
        << " of " << n << " agree with the bundle"
        << (acc.ok ? "; the successor is acceptable along it." :
                     "; the successor is not acceptable along it.");
    return finish(out, rec, sum.str());
  });
}

}  // extern "C"
