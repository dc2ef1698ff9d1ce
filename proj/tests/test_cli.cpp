#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct CommandResult {
  int exit_code;
  std::string output;  // stdout only
};

CommandResult run_cli(const std::string& args) {
  std::string command = std::string(SILL_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  std::array<char, 512> buffer;
  while (fgets(buffer.data(), buffer.size(), pipe)) output += buffer.data();
  int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

std::string corpus_path() { return std::string(SILL_PROGRAMS_DIR) + "/corpus.sill"; }
std::string stuck_path() { return std::string(SILL_PROGRAMS_DIR) + "/stuck.sill"; }

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = "/tmp/sill_cli_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("check accepts the corpus") {
  CHECK(run_cli("check " + corpus_path()).exit_code == 0);
}

TEST_CASE("check rejects a weakly declared increment") {
  std::string text = read_all(corpus_path());
  const std::string full =
      "proc inc : (Std -o Std) /\\ (StdPos -o StdPos) /\\ (Empty -o StdPos)";
  auto pos = text.find(full);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, full.size(), "proc inc : Std -o Std");
  std::string path = write_temp("weak_inc.sill", text);
  CHECK(run_cli("check " + path).exit_code == 1);
}

TEST_CASE("check distinguishes parse errors and missing files") {
  std::string garbage = write_temp("garbage.sill", "@@@ not a signature @@@");
  CHECK(run_cli("check " + garbage).exit_code == 2);
  CHECK(run_cli("check /nonexistent/nowhere.sill").exit_code == 3);
}

TEST_CASE("subtype prints a verdict and encodes it in the exit code") {
  CommandResult yes = run_cli("subtype " + corpus_path() + " Pos Nat");
  CHECK(yes.exit_code == 0);
  CHECK(yes.output == "Pos <= Nat : yes\n");

  CommandResult no = run_cli("subtype " + corpus_path() + " Nat Pos");
  CHECK(no.exit_code == 1);
  CHECK(no.output == "Nat <= Pos : no\n");

  CommandResult dist = run_cli("subtype " + corpus_path() +
                               " \"(Even \\/ 1) /\\ (Odd \\/ 1)\" \"(Even /\\ Odd) \\/ 1\"");
  CHECK(dist.exit_code == 0);

  CHECK(run_cli("subtype " + corpus_path() + " \"Nat -o\" Nat").exit_code == 2);
  CHECK(run_cli("subtype " + corpus_path() + " NoSuchType Nat").exit_code == 2);
}

TEST_CASE("run prints the observable behavior of the root") {
  CommandResult z = run_cli("run " + corpus_path() + " main_z");
  CHECK(z.exit_code == 0);
  CHECK(z.output == "zero end\n");

  CommandResult dbl = run_cli("run " + corpus_path() + " main_double3 --seed 7");
  CHECK(dbl.exit_code == 0);
  CHECK(dbl.output == "succ succ succ succ succ succ zero end\n");

  CommandResult inc7 = run_cli("run " + corpus_path() + " main_inc7");
  CHECK(inc7.exit_code == 0);
  CHECK(inc7.output == "zero zero zero one eps end\n");
}

TEST_CASE("identical inputs and seed give byte identical output") {
  CommandResult a = run_cli("run " + corpus_path() + " main_double3 --seed 99");
  CommandResult b = run_cli("run " + corpus_path() + " main_double3 --seed 99");
  CHECK(a.output == b.output);
  CHECK(a.exit_code == b.exit_code);

  CommandResult ta = run_cli("trace " + corpus_path() + " main_inc7 --seed 5");
  CommandResult tb = run_cli("trace " + corpus_path() + " main_inc7 --seed 5");
  CHECK(ta.output == tb.output);
  CHECK_FALSE(ta.output.empty());
}

TEST_CASE("running an unchecked deadlock reports exit 4") {
  CHECK(run_cli("run " + stuck_path() + " main_dead --no-check").exit_code == 4);
  // without the escape hatch the checker stops it first
  CHECK(run_cli("run " + stuck_path() + " main_dead").exit_code == 1);
}

TEST_CASE("fuel exhaustion reports exit 5") {
  CHECK(run_cli("run " + stuck_path() + " spin --no-check --fuel 200").exit_code == 5);
}

TEST_CASE("missing entries and parameterized entries are refused") {
  CHECK(run_cli("run " + corpus_path() + " nonexistent").exit_code == 1);
  CHECK(run_cli("run " + corpus_path() + " double").exit_code == 1);
}

TEST_CASE("trace files record one event per line") {
  std::string path = "/tmp/sill_cli_trace.txt";
  CommandResult r = run_cli("run " + corpus_path() + " main_z --trace " + path);
  CHECK(r.exit_code == 0);
  std::string trace = read_all(path);
  CHECK(trace.find("defunfold root") != std::string::npos);
  CHECK(trace.find("select") != std::string::npos);
  CHECK(trace.find("close") != std::string::npos);
}
