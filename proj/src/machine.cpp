#include "spectra/machine.hpp"

#include <algorithm>
#include <sstream>

namespace spectra {
namespace {

constexpr uint32_t kMaxRegister = 255;

struct Line {
  std::string_view text;
  size_t number;
};

// Split into instruction lines, skipping blanks and '#' comments.
std::vector<Line> instruction_lines(std::string_view text) {
  std::vector<Line> out;
  size_t lineno = 0, pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b != std::string_view::npos) {
      size_t e = line.find_last_not_of(" \t\r");
      out.push_back({line.substr(b, e - b + 1), lineno});
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> t;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) t.push_back(s.substr(i, j - i));
    i = j;
  }
  return t;
}

uint64_t parse_number(std::string_view tok, size_t lineno, const char* what) {
  if (tok.empty()) throw parse_error("line " + std::to_string(lineno) + ": missing " + what);
  uint64_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9')
      throw parse_error("line " + std::to_string(lineno) + ": bad " + what + " '" + std::string(tok) + "'");
    v = v * 10 + uint64_t(c - '0');
    if (v > UINT32_MAX) throw parse_error("line " + std::to_string(lineno) + ": " + what + " out of range");
  }
  return v;
}

uint32_t parse_register(std::string_view tok, size_t lineno) {
  if (tok.size() < 2 || tok[0] != 'r')
    throw parse_error("line " + std::to_string(lineno) + ": bad register '" + std::string(tok) + "'");
  uint64_t v = parse_number(tok.substr(1), lineno, "register");
  if (v > kMaxRegister) throw parse_error("line " + std::to_string(lineno) + ": register out of range");
  return uint32_t(v);
}

std::vector<Instruction> parse_instructions(std::string_view text, bool allow_qry) {
  std::vector<Instruction> ins;
  auto lines = instruction_lines(text);
  for (const Line& ln : lines) {
    auto toks = tokens(ln.text);
    if (toks.empty()) continue;
    Instruction i{};
    std::string_view op = toks[0];
    auto want = [&](size_t n) {
      if (toks.size() != n)
        throw parse_error("line " + std::to_string(ln.number) + ": wrong arity for '" + std::string(op) + "'");
    };
    if (op == "INC") {
      want(2);
      i.op = Opcode::Inc;
      i.reg = parse_register(toks[1], ln.number);
    } else if (op == "DECJZ") {
      want(3);
      i.op = Opcode::DecJz;
      i.reg = parse_register(toks[1], ln.number);
      i.target = uint32_t(parse_number(toks[2], ln.number, "jump target"));
    } else if (op == "QRY") {
      want(2);
      if (!allow_qry)
        throw parse_error("line " + std::to_string(ln.number) + ": QRY not allowed in an oracle-free program");
      i.op = Opcode::Qry;
      i.reg = parse_register(toks[1], ln.number);
    } else if (op == "HALT") {
      want(2);
      i.op = Opcode::Halt;
      i.reg = parse_register(toks[1], ln.number);
    } else {
      throw parse_error("line " + std::to_string(ln.number) + ": unknown opcode '" + std::string(op) + "'");
    }
    ins.push_back(i);
  }
  for (size_t k = 0; k < ins.size(); ++k)
    if (ins[k].op == Opcode::DecJz && ins[k].target >= ins.size())
      throw parse_error("jump target " + std::to_string(ins[k].target) + " out of range (program has " +
                        std::to_string(ins.size()) + " instructions)");
  return ins;
}

std::string render(const std::vector<Instruction>& ins) {
  std::ostringstream os;
  for (const Instruction& i : ins) {
    switch (i.op) {
      case Opcode::Inc: os << "INC r" << i.reg; break;
      case Opcode::DecJz: os << "DECJZ r" << i.reg << ' ' << i.target; break;
      case Opcode::Qry: os << "QRY r" << i.reg; break;
      case Opcode::Halt: os << "HALT r" << i.reg; break;
    }
    os << '\n';
  }
  return os.str();
}

uint32_t max_register(const std::vector<Instruction>& ins) {
  uint32_t m = 0;
  for (const Instruction& i : ins) m = std::max(m, i.reg);
  return m;
}

void validate(const std::vector<Instruction>& ins, bool allow_qry) {
  for (size_t k = 0; k < ins.size(); ++k) {
    const Instruction& i = ins[k];
    if (i.reg > kMaxRegister) throw parse_error("register out of range at instruction " + std::to_string(k));
    if (i.op == Opcode::DecJz && i.target >= ins.size())
      throw parse_error("jump target out of range at instruction " + std::to_string(k));
    if (i.op == Opcode::Qry && !allow_qry)
      throw parse_error("QRY not allowed in an oracle-free program");
  }
}

}  // namespace

Program Program::parse(std::string_view text) {
  Program p;
  p.ins_ = parse_instructions(text, /*allow_qry=*/false);
  return p;
}

Program Program::from_instructions(std::vector<Instruction> ins) {
  validate(ins, /*allow_qry=*/false);
  Program p;
  p.ins_ = std::move(ins);
  return p;
}

std::string Program::to_text() const { return render(ins_); }

OracleProgram OracleProgram::parse(std::string_view text) {
  OracleProgram p;
  p.ins_ = parse_instructions(text, /*allow_qry=*/true);
  return p;
}

OracleProgram OracleProgram::from_instructions(std::vector<Instruction> ins) {
  validate(ins, /*allow_qry=*/true);
  OracleProgram p;
  p.ins_ = std::move(ins);
  return p;
}

std::string OracleProgram::to_text() const { return render(ins_); }

EvalResult evaluate(const Program& p, uint64_t x, uint64_t budget) {
  const auto& ins = p.instructions();
  EvalResult r;
  if (ins.empty()) return r;  // off the end immediately: diverges
  std::vector<uint64_t> reg(max_register(ins) + 1, 0);
  reg[0] = x;
  uint64_t pc = 0;
  for (uint64_t step = 0; step < budget; ++step) {
    if (pc >= ins.size()) { r.steps = step; return r; }  // ran off the end: divergence
    const Instruction& i = ins[pc];
    switch (i.op) {
      case Opcode::Inc:
        ++reg[i.reg];
        ++pc;
        break;
      case Opcode::DecJz:
        if (reg[i.reg] == 0) pc = i.target;
        else { --reg[i.reg]; ++pc; }
        break;
      case Opcode::Halt:
        r.halted = true;
        r.value = reg[i.reg];
        r.steps = step + 1;
        return r;
      case Opcode::Qry:
        // unreachable: parser rejects QRY in oracle-free programs
        r.steps = step;
        return r;
    }
  }
  r.steps = budget;
  return r;
}

OracleEvalResult evaluate_with_oracle(const OracleProgram& q, uint64_t x,
                                      std::span<const uint8_t> oracle, uint64_t budget) {
  const auto& ins = q.instructions();
  OracleEvalResult r;
  if (ins.empty()) return r;
  std::vector<uint64_t> reg(max_register(ins) + 1, 0);
  reg[0] = x;
  uint64_t pc = 0;
  uint64_t use = 0;
  for (uint64_t step = 0; step < budget; ++step) {
    if (pc >= ins.size()) { r.steps = step; return r; }
    const Instruction& i = ins[pc];
    switch (i.op) {
      case Opcode::Inc:
        ++reg[i.reg];
        ++pc;
        break;
      case Opcode::DecJz:
        if (reg[i.reg] == 0) pc = i.target;
        else { --reg[i.reg]; ++pc; }
        break;
      case Opcode::Qry: {
        uint64_t pos = reg[i.reg];
        if (pos >= oracle.size()) {
          r.kind = OracleEvalResult::Kind::OracleUnderflow;
          r.position = pos;
          r.use = use;
          r.steps = step;
          return r;
        }
        use = std::max(use, pos + 1);
        reg[i.reg] = oracle[pos];
        ++pc;
        break;
      }
      case Opcode::Halt:
        r.kind = OracleEvalResult::Kind::Halted;
        r.value = reg[i.reg];
        r.use = use;
        r.steps = step + 1;
        return r;
    }
  }
  r.use = use;
  r.steps = budget;
  return r;
}

CeSet CeSet::empty() { return CeSet(); }

CeSet CeSet::from_program(Program enum_prog, uint64_t per_input_budget) {
  CeSet w;
  w.source_ = Source::Prog;
  w.prog_ = std::move(enum_prog);
  w.per_input_budget_ = per_input_budget;
  return w;
}

CeSet CeSet::from_schedule(std::vector<std::pair<uint64_t, uint64_t>> entries) {
  CeSet w;
  w.source_ = Source::Schedule;
  w.entries_ = std::move(entries);
  return w;
}

CeSet CeSet::halting_set(std::vector<Program> catalog) {
  CeSet w;
  w.source_ = Source::Halting;
  w.catalog_ = std::move(catalog);
  return w;
}

std::vector<uint64_t> CeSet::at_stage(uint64_t s) const {
  std::vector<uint64_t> out;
  switch (source_) {
    case Source::Empty:
      break;
    case Source::Prog:
      for (uint64_t t = 0; t <= s; ++t) {
        EvalResult r = evaluate(prog_, t, per_input_budget_);
        if (r.halted) out.push_back(r.value);
      }
      break;
    case Source::Schedule:
      for (const auto& [e, st] : entries_)
        if (st <= s) out.push_back(e);
      break;
    case Source::Halting:
      for (size_t i = 0; i < catalog_.size(); ++i)
        if (evaluate(catalog_[i], i, s).halted) out.push_back(i);
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool CeSet::contains(uint64_t e, uint64_t s) const {
  auto v = at_stage(s);
  return std::binary_search(v.begin(), v.end(), e);
}

}  // namespace spectra
