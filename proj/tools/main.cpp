// Command-line front end: check signatures, query subtyping, run processes.
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sill/parse.hpp"
#include "sill/print.hpp"
#include "sill/runtime.hpp"
#include "sill/sigcheck.hpp"
#include "sill/subtype.hpp"

namespace {

// Exit codes shared by all commands:
//   0 success / subtype holds       4 deadlock
//   1 check failure / subtype fails 5 fuel exhausted
//   2 parse error                   6 fidelity violation
//   3 I/O error

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitParseError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitDeadlock = 4;
constexpr int kExitFuel = 5;
constexpr int kExitFidelity = 6;

struct LoadedFile {
  sill::Signature sig;
  int error = kExitOk;
};

LoadedFile load_signature(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    return {{}, kExitIoError};
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return {sill::parse_signature(buffer.str()), kExitOk};
  } catch (const sill::ParseError& e) {
    std::cerr << path << ":" << e.what() << "\n";
    return {{}, kExitParseError};
  }
}

int cmd_check(const std::string& path) {
  LoadedFile file = load_signature(path);
  if (file.error) return file.error;
  auto diags = sill::check_signature(file.sig);
  for (const auto& d : diags) std::cerr << path << ":" << sill::render(d) << "\n";
  return diags.empty() ? kExitOk : kExitCheckFailed;
}

int cmd_subtype(const std::string& path, const std::string& lhs, const std::string& rhs) {
  LoadedFile file = load_signature(path);
  if (file.error) return file.error;
  if (!sill::check_names(file.sig).empty() || !sill::check_contractive(file.sig).ok) {
    std::cerr << "error: signature in '" << path << "' is not well formed\n";
    return kExitParseError;
  }
  sill::TypePtr a, b;
  try {
    a = sill::parse_type(lhs);
    b = sill::parse_type(rhs);
  } catch (const sill::ParseError& e) {
    std::cerr << "error in type expression: " << e.what() << "\n";
    return kExitParseError;
  }
  // Type expressions live in the file's scope; reject stray names up front.
  sill::Signature probe = file.sig;
  for (const auto& t : {a, b}) {
    std::set<std::string> names;
    std::function<void(const sill::TypePtr&)> walk = [&](const sill::TypePtr& ty) {
      if (ty->kind == sill::TypeKind::Name && !probe.find_type(ty->name)) names.insert(ty->name);
      if (ty->left) walk(ty->left);
      if (ty->right) walk(ty->right);
      for (const auto& br : ty->branches) walk(br.type);
    };
    walk(t);
    if (!names.empty()) {
      for (const auto& n : names) std::cerr << "error: undefined type name '" << n << "'\n";
      return kExitParseError;
    }
  }
  bool yes = sill::subtype(file.sig, a, b);
  std::cout << lhs << " <= " << rhs << " : " << (yes ? "yes" : "no") << "\n";
  return yes ? kExitOk : kExitCheckFailed;
}

struct RunOptions {
  uint64_t seed = 0;
  uint64_t fuel = 1000000;
  std::string trace_path;
  bool no_check = false;
  bool print_trace = false;  // trace subcommand
};

int cmd_run(const std::string& path, const std::string& entry, const RunOptions& opts) {
  LoadedFile file = load_signature(path);
  if (file.error) return file.error;
  if (!opts.no_check) {
    auto diags = sill::check_signature(file.sig);
    if (!diags.empty()) {
      for (const auto& d : diags) std::cerr << path << ":" << sill::render(d) << "\n";
      return kExitCheckFailed;
    }
  }
  const sill::ProcDecl* def = file.sig.find_proc(entry);
  if (!def) {
    std::cerr << "error: no process named '" << entry << "'\n";
    return kExitCheckFailed;
  }
  if (def->arity != 0) {
    std::cerr << "error: '" << entry << "' takes parameters and cannot run on its own\n";
    return kExitCheckFailed;
  }

  sill::Channel root = sill::Channel::named("root");
  sill::Channel observer = sill::Channel::named("obs");
  std::map<sill::Channel, sill::TermPtr> procs = {
      {root, sill::tm::call(entry)},
      {observer, sill::tm::drain(root)},
  };
  sill::Configuration config = sill::make_configuration(
      std::move(procs), {{root, def->declared}});

  sill::RunResult result = sill::run(file.sig, std::move(config), opts.seed, opts.fuel);

  if (!opts.trace_path.empty()) {
    std::ofstream out(opts.trace_path);
    if (!out) {
      std::cerr << "error: cannot write '" << opts.trace_path << "'\n";
      return kExitIoError;
    }
    for (const auto& ev : result.trace) out << sill::to_string(ev) << "\n";
  }
  if (opts.print_trace) {
    for (const auto& ev : result.trace) std::cout << sill::to_string(ev) << "\n";
  } else {
    std::string line;
    for (const auto& obs : sill::observations(result.trace, root)) {
      if (!line.empty()) line += " ";
      line += obs;
    }
    std::cout << line << "\n";
  }

  switch (result.status) {
    case sill::RunStatus::Poised:
      return kExitOk;
    case sill::RunStatus::Deadlock:
      std::cerr << "deadlock: no step enabled and not every process is poised\n";
      return kExitDeadlock;
    case sill::RunStatus::FuelExhausted:
      std::cerr << "fuel exhausted after " << opts.fuel << " steps\n";
      return kExitFuel;
    case sill::RunStatus::FidelityViolation:
      std::cerr << result.violation->render() << "\n";
      return kExitFidelity;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sill: session-typed processes with intersection and union types"};
  app.require_subcommand(1);

  std::string file, entry, lhs, rhs;
  RunOptions opts;

  CLI::App* check = app.add_subcommand("check", "validate a signature file");
  check->add_option("file", file, "signature file (.sill)")->required();

  CLI::App* sub = app.add_subcommand("subtype", "decide a subtyping query in a file's scope");
  sub->add_option("file", file, "signature file (.sill)")->required();
  sub->add_option("lhs", lhs, "left type expression")->required();
  sub->add_option("rhs", rhs, "right type expression")->required();

  auto add_run_flags = [&opts](CLI::App* cmd) {
    cmd->add_option("--seed", opts.seed, "scheduler seed (default 0)");
    cmd->add_option("--fuel", opts.fuel, "maximum number of steps (default 1000000)");
    cmd->add_option("--trace", opts.trace_path, "write the step trace to this file");
    cmd->add_flag("--no-check", opts.no_check, "skip signature checking before running");
  };

  CLI::App* runc = app.add_subcommand("run", "execute a process and print what it offers");
  runc->add_option("file", file, "signature file (.sill)")->required();
  runc->add_option("entry", entry, "process definition to run")->required();
  add_run_flags(runc);

  CLI::App* tracec = app.add_subcommand("trace", "execute a process and print the step trace");
  tracec->add_option("file", file, "signature file (.sill)")->required();
  tracec->add_option("entry", entry, "process definition to run")->required();
  add_run_flags(tracec);

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(file);
    if (sub->parsed()) return cmd_subtype(file, lhs, rhs);
    if (runc->parsed()) return cmd_run(file, entry, opts);
    opts.print_trace = true;
    return cmd_run(file, entry, opts);
  } catch (const std::exception& e) {
    // reachable with --no-check on signatures whose names do not resolve
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}
