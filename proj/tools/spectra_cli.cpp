// Command-line front door. Loads input files, hands their text to the C
// API, writes the machine-readable records to --out (stdout by default) and
// a human summary to stderr. One command per process.
//
// Exit codes: 0 ok, 1 config error, 2 structural failure, 3 budget exhausted.
// SPECTRA_LOG_LEVEL: 0 silences the summary, 1 (default) prints it, 2 also
// echoes the resolved configuration.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "spectra.h"

namespace {

int g_log_level = 1;

int config_fail(const std::string& msg) {
  std::cerr << "error: " << msg << '\n';
  return 1;
}

std::optional<std::string> read_file(const std::string& path, std::string* err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    *err = "cannot open " + path;
    return std::nullopt;
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int status_to_exit(int status) {
  switch (status) {
    case SPECTRA_OK: return 0;
    case SPECTRA_ERR_ARG:
    case SPECTRA_ERR_PARSE: return 1;
    case SPECTRA_ERR_BUDGET: return 3;
    default: return 2;  // structural and internal failures
  }
}

// Emit records + summary per the log level; consumes the result.
int deliver(int status, spectra_result* res, const std::string& out_path) {
  if (status != SPECTRA_OK) {
    std::cerr << "error: " << spectra_last_error() << '\n';
    spectra_result_free(res);
    return status_to_exit(status);
  }
  const char* records = spectra_result_records(res);
  if (out_path.empty()) {
    std::cout << records;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      spectra_result_free(res);
      return config_fail("cannot write " + out_path);
    }
    out << records;
  }
  if (g_log_level >= 1) std::cerr << spectra_result_summary(res) << '\n';
  spectra_result_free(res);
  return 0;
}

struct InjuryConfig {
  std::string mode;
  std::map<std::string, std::string> paths;   // catalog/spec/phi/psi/wset
  std::optional<uint64_t> stages, max_length, m_cap;
  int pair_rule = 0;
};

std::string dirname_of(const std::string& path) {
  size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

// Line records: mode/stages/max-length/m-cap/pair-rule plus file keys
// (catalog, spec, phi, psi, wset) resolved relative to the config file.
bool parse_injury_config(const std::string& path, const std::string& text, InjuryConfig* cfg,
                         std::string* err) {
  std::istringstream is(text);
  std::string line;
  uint64_t lineno = 0;
  std::string base = dirname_of(path);
  while (std::getline(is, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string key, value;
    if (!(ls >> key)) continue;
    if (!(ls >> value)) {
      *err = path + ":" + std::to_string(lineno) + ": key `" + key + "` lacks a value";
      return false;
    }
    std::string extra;
    if (ls >> extra) {
      *err = path + ":" + std::to_string(lineno) + ": trailing token `" + extra + "`";
      return false;
    }
    auto number = [&](std::optional<uint64_t>* slot) {
      for (char c : value)
        if (c < '0' || c > '9') {
          *err = path + ":" + std::to_string(lineno) + ": `" + value + "` is not a number";
          return false;
        }
      *slot = std::stoull(value);
      return true;
    };
    if (key == "mode") {
      cfg->mode = value;
    } else if (key == "stages") {
      if (!number(&cfg->stages)) return false;
    } else if (key == "max-length") {
      if (!number(&cfg->max_length)) return false;
    } else if (key == "m-cap") {
      if (!number(&cfg->m_cap)) return false;
    } else if (key == "pair-rule") {
      if (value == "preimage-left")
        cfg->pair_rule = 0;
      else if (value == "leftmost-maps-right")
        cfg->pair_rule = 1;
      else {
        *err = path + ":" + std::to_string(lineno) + ": unknown pair rule `" + value + "`";
        return false;
      }
    } else if (key == "catalog" || key == "spec" || key == "phi" || key == "psi" ||
               key == "wset") {
      cfg->paths[key] = value.front() == '/' ? value : base + "/" + value;
    } else {
      *err = path + ":" + std::to_string(lineno) + ": unknown key `" + key + "`";
      return false;
    }
  }
  if (cfg->mode != "finite" && cfg->mode != "tree") {
    *err = path + ": mode must be `finite` or `tree` (got `" + cfg->mode + "`)";
    return false;
  }
  return true;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* lvl = std::getenv("SPECTRA_LOG_LEVEL")) {
    std::string v(lvl);
    if (v == "0" || v == "quiet") g_log_level = 0;
    else if (v == "2" || v == "debug") g_log_level = 2;
  }

  CLI::App app{"workbench for block functions, computable copies of (omega,<), and priority constructions"};
  app.require_subcommand(1);

  std::string spec_path, program_path, schedule_path, out_path, config_path;
  uint64_t n = 0, x = 0, stages = 0, budget = 0, m_cap = 0, seed = 0;
  std::string encode_mode;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "write records here instead of stdout");
    cmd->add_option("--seed", seed, "recorded for reproducibility; no command draws randomness");
  };

  CLI::App* dec = app.add_subcommand("decompose", "split a prefix of f into blocks");
  dec->add_option("n", n, "prefix length")->required();
  auto* dspec = dec->add_option("--spec", spec_path, "block-spec file for f");
  dec->add_option("--program", program_path, "register-machine file for f")->excludes(dspec);
  dec->add_option("--budget", budget, "per-evaluation step budget (default 10000)");
  add_common(dec);

  CLI::App* cls = app.add_subcommand("classify", "shape-classify a prefix of f");
  cls->add_option("n", n, "prefix length")->required();
  auto* cspec = cls->add_option("--spec", spec_path, "block-spec file for f");
  cls->add_option("--program", program_path, "register-machine file for f")->excludes(cspec);
  cls->add_option("--budget", budget, "per-evaluation step budget (default 10000)");
  add_common(cls);

  CLI::App* rcv = app.add_subcommand("recover", "find the <-successor of x in a scheduled copy");
  rcv->add_option("x", x, "element name in the copy")->required();
  rcv->add_option("--spec", spec_path, "block-spec file for f")->required();
  rcv->add_option("--schedule", schedule_path, "copy-building schedule program")->required();
  rcv->add_option("--stages", stages, "schedule stages to run (default 64)");
  rcv->add_option("--budget", budget, "oracle-query and step budget (default 10000)");
  add_common(rcv);

  CLI::App* inj = app.add_subcommand("injury", "run a priority construction from a config file");
  inj->add_option("config", config_path, "construction config file")->required();
  inj->add_option("--stages", stages, "override the config's stage count");
  inj->add_option("--m-cap", m_cap, "override the config's attack-slot cap (tree mode)");
  add_common(inj);

  CLI::App* enc = app.add_subcommand("encode", "encode a set into a copy of (omega,<)");
  enc->add_option("mode", encode_mode, "ce | delta2")->required()
      ->check(CLI::IsMember({"ce", "delta2"}));
  enc->add_option("--schedule", schedule_path,
                  "entry schedule (.wset), program catalog (.cat) or approximation script (.apx)")
      ->required();
  enc->add_option("--spec", spec_path, "block-spec file for f (delta2 mode)");
  enc->add_option("--stages", stages, "stages to run");
  enc->add_option("--budget", budget, "halting-set step budget; doubles as stages when unset");
  add_common(enc);

  CLI::App* trn = app.add_subcommand("translate", "rebuild a notation assignment from its successor");
  trn->add_option("--spec", spec_path, "notation bundle file")->required();
  trn->add_option("--program", program_path, "successor program file")->required();
  trn->add_option("--budget", budget, "per-evaluation step budget (default 10000)");
  add_common(trn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints the message / help text
    return code == 0 ? 0 : 1;  // every command-line failure is a config error
  }

  std::string err;
  auto load = [&](const std::string& path) -> std::optional<std::string> {
    return read_file(path, &err);
  };

  spectra_result* res = nullptr;

  if (dec->parsed() || cls->parsed()) {
    if (spec_path.empty() && program_path.empty())
      return config_fail("pass --spec or --program");
    std::optional<std::string> spec, prog;
    if (!spec_path.empty() && !(spec = load(spec_path))) return config_fail(err);
    if (!program_path.empty() && !(prog = load(program_path))) return config_fail(err);
    if (g_log_level >= 2)
      std::cerr << "config: " << (dec->parsed() ? "decompose" : "classify") << " n=" << n
                << " budget=" << budget << " seed=" << seed << '\n';
    int status = dec->parsed()
                     ? spectra_decompose(spec ? spec->c_str() : nullptr,
                                         prog ? prog->c_str() : nullptr, n, budget, &res)
                     : spectra_classify(spec ? spec->c_str() : nullptr,
                                        prog ? prog->c_str() : nullptr, n, budget, &res);
    return deliver(status, res, out_path);
  }

  if (rcv->parsed()) {
    auto spec = load(spec_path);
    if (!spec) return config_fail(err);
    auto sched = load(schedule_path);
    if (!sched) return config_fail(err);
    if (!stages) stages = 64;
    if (g_log_level >= 2)
      std::cerr << "config: recover x=" << x << " stages=" << stages << " budget=" << budget
                << " seed=" << seed << '\n';
    int status = spectra_recover(spec->c_str(), sched->c_str(), x, stages, budget, &res);
    return deliver(status, res, out_path);
  }

  if (inj->parsed()) {
    auto text = load(config_path);
    if (!text) return config_fail(err);
    InjuryConfig cfg;
    if (!parse_injury_config(config_path, *text, &cfg, &err)) return config_fail(err);
    if (stages) cfg.stages = stages;
    if (m_cap) cfg.m_cap = m_cap;
    auto file_of = [&](const char* key) -> std::optional<std::string> {
      auto it = cfg.paths.find(key);
      if (it == cfg.paths.end()) return std::nullopt;
      auto got = load(it->second);
      if (!got) return std::nullopt;
      return got;
    };
    if (cfg.mode == "finite") {
      std::optional<std::string> cat;
      if (cfg.paths.count("catalog") && !(cat = file_of("catalog"))) return config_fail(err);
      uint64_t st = cfg.stages.value_or(50);
      if (g_log_level >= 2)
        std::cerr << "config: injury finite stages=" << st << " seed=" << seed << '\n';
      int status = spectra_injury_finite(cat ? cat->c_str() : nullptr, st,
                                         cfg.max_length.value_or(0), &res);
      return deliver(status, res, out_path);
    }
    for (const char* key : {"spec", "phi", "psi", "wset"})
      if (!cfg.paths.count(key))
        return config_fail(config_path + ": tree mode needs key `" + key + "`");
    auto spec = file_of("spec"), phi = file_of("phi"), psi = file_of("psi"),
         wset = file_of("wset");
    if (!spec || !phi || !psi || !wset) return config_fail(err);
    uint64_t st = cfg.stages.value_or(0);
    if (g_log_level >= 2)
      std::cerr << "config: injury tree stages=" << st << " m-cap=" << cfg.m_cap.value_or(0)
                << " pair-rule=" << cfg.pair_rule << " seed=" << seed << '\n';
    int status = spectra_injury_tree(spec->c_str(), phi->c_str(), psi->c_str(), wset->c_str(),
                                     st, cfg.m_cap.value_or(0), cfg.pair_rule, &res);
    return deliver(status, res, out_path);
  }

  if (enc->parsed()) {
    auto sched = load(schedule_path);
    if (!sched) return config_fail(err);
    if (encode_mode == "ce") {
      if (!stages) stages = budget ? budget : 100;
      bool catalog = ends_with(schedule_path, ".cat");
      if (g_log_level >= 2)
        std::cerr << "config: encode ce stages=" << stages
                  << (catalog ? " (halting set)" : " (entry schedule)") << " seed=" << seed
                  << '\n';
      int status = spectra_encode_ce(catalog ? nullptr : sched->c_str(),
                                     catalog ? sched->c_str() : nullptr, stages, &res);
      return deliver(status, res, out_path);
    }
    if (spec_path.empty()) return config_fail("delta2 mode needs --spec");
    auto spec = load(spec_path);
    if (!spec) return config_fail(err);
    if (!stages) stages = 100;
    if (g_log_level >= 2)
      std::cerr << "config: encode delta2 stages=" << stages << " seed=" << seed << '\n';
    int status = spectra_encode_delta2(sched->c_str(), spec->c_str(), stages, &res);
    return deliver(status, res, out_path);
  }

  if (trn->parsed()) {
    auto bundle = load(spec_path);
    if (!bundle) return config_fail(err);
    auto succ = load(program_path);
    if (!succ) return config_fail(err);
    if (g_log_level >= 2)
      std::cerr << "config: translate budget=" << budget << " seed=" << seed << '\n';
    int status = spectra_translate(bundle->c_str(), succ->c_str(), budget, &res);
    return deliver(status, res, out_path);
  }

  return config_fail("no subcommand");
}
