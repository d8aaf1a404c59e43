#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"

namespace tpm {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tpm-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the CLI against this test's workspace; stdout lands in out_.
  int run(const std::string& args, const std::string& stdin_text = {}) {
    const fs::path out = dir_ / "stdout.txt", in = dir_ / "stdin.txt";
    std::ofstream(in) << stdin_text;
    const std::string cmd = std::string("\"") + TPM_CLI_PATH + "\" --workspace \"" + (dir_ / "ws").string() + "\" " +
                            args + " < \"" + in.string() + "\" > \"" + out.string() + "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    out_ = read_file(out);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  static std::string fixture(const std::string& name) { return "\"" + testing::fixture_path(name).string() + "\""; }
  static std::string query(const std::string& name) {
    return "\"" + (fs::path(TPM_QUERY_DIR) / name).string() + "\"";
  }

  int prepare() {
    if (int rc = run("load " + fixture("example1.opm"))) return rc;
    return run("convert");
  }

  fs::path dir_;
  std::string out_;
};

TEST_F(Cli, LoadAndConvert) {
  ASSERT_EQ(run("load " + fixture("example1.opm")), 0);
  EXPECT_NE(out_.find("4 artifacts, 6 processes, 4 agents"), std::string::npos);
  ASSERT_EQ(run("convert"), 0);
  EXPECT_NE(out_.find("Analysis.doc"), std::string::npos);
  EXPECT_NE(out_.find("t3 t4 t5 t6"), std::string::npos);
  EXPECT_EQ(run("convert"), 1);
  EXPECT_EQ(run("convert --force"), 0);
}

TEST_F(Cli, QueriesAndApply) {
  ASSERT_EQ(prepare(), 0);
  ASSERT_EQ(run("query " + query("example2.tpql")), 0);
  EXPECT_EQ(out_, "created analysis_process (folder, 4 members)\n");
  ASSERT_EQ(run("query " + query("example3.tpql")), 0);
  EXPECT_EQ(out_, "?a\t?ts\nEvent-3@3\tt3\nEvent-4@4\tt4\nEvent-5@5\tt5\n");
  ASSERT_EQ(run("query " + query("example5.tpql")), 0);
  EXPECT_EQ(out_, "created analysisDoc_derivation (path, 3 paths)\n");
  ASSERT_EQ(run("query " + query("example6.tpql")), 0);
  EXPECT_EQ(out_.substr(0, out_.find('\n')), "path\t?a\t?ts");
  EXPECT_NE(out_.find("path:3\tSample_Analysis.pdf@4\tt4"), std::string::npos);
}

TEST_F(Cli, ReplListsAndEvolves) {
  ASSERT_EQ(prepare(), 0);
  ASSERT_EQ(run("query " + query("example2.tpql")), 0);
  ASSERT_EQ(run("repl", "\\list\n\\evolution analysis_process t3\nselect ?e where { ?e @id `Event-1'. }\n\\quit\n"), 0);
  EXPECT_NE(out_.find("analysis_process (folder, 4 members)"), std::string::npos);
  EXPECT_NE(out_.find("Event-3@3"), std::string::npos);
  EXPECT_NE(out_.find("Event-1@1"), std::string::npos);
}

TEST_F(Cli, TickPersists) {
  ASSERT_EQ(prepare(), 0);
  ASSERT_EQ(run("query " + query("example2.tpql")), 0);
  ASSERT_EQ(run("tick t7"), 0);
  EXPECT_EQ(run("tick t8"), 0);
}

TEST_F(Cli, ExportDot) {
  ASSERT_EQ(prepare(), 0);
  ASSERT_EQ(run("export-dot"), 0);
  EXPECT_EQ(out_.rfind("digraph", 0), 0u);
  ASSERT_EQ(run("query " + query("example2.tpql")), 0);
  ASSERT_EQ(run("export-dot analysis_process -o \"" + (dir_ / "f.dot").string() + "\""), 0);
  EXPECT_NE(read_file(dir_ / "f.dot").find("Event-3@3"), std::string::npos);
  EXPECT_EQ(run("export-dot nowhere"), 1);
  EXPECT_EQ(run("export-dot -o /nonexistent-dir/x.dot"), 5);
  ASSERT_EQ(run("query -e \"fconstruct Empty as ?f select ?x where { ?x @type nothing. }\""), 0);
  ASSERT_EQ(run("export-dot Empty"), 0);
  EXPECT_NE(out_.find("shape=box"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("load \"" + write("bad.opm", "node A Widget\n").string() + "\""), 2);
  EXPECT_EQ(run("load \"" + write("illegal.opm", "node A Artifact\nnode P Process\nedge A used P t=1\n").string() + "\""), 3);
  EXPECT_EQ(run("load \"" + (dir_ / "missing.opm").string() + "\""), 5);
  EXPECT_EQ(run("convert"), 1);
  ASSERT_EQ(prepare(), 0);
  EXPECT_EQ(run("query -e \"select ?x where { ?x @type event\""), 4);
  EXPECT_EQ(run("query " + query("example3.tpql")), 4);
  EXPECT_EQ(run("frobnicate"), 1);
  std::ofstream(dir_ / "ws" / "graph.tpm", std::ios::app) << "# tampered\n";
  EXPECT_EQ(run("query " + query("example3.tpql")), 5);
}

TEST_F(Cli, BenchIsReproducible) {
  ASSERT_EQ(run("bench --sizes 50,100 --seed 3 --no-times"), 0);
  const std::string first = out_;
  ASSERT_EQ(run("bench --sizes 50,100 --seed 3 --no-times"), 0);
  EXPECT_EQ(out_, first);
  EXPECT_FALSE(first.empty());
}

struct ConsoleStep {
  std::string command;
  std::string expected;
};

/// Commands (`$ ` lines) and their exact stdout from every console block.
std::vector<ConsoleStep> console_steps(const std::string& markdown) {
  std::vector<ConsoleStep> steps;
  std::istringstream in(markdown);
  std::string line;
  bool inside = false;
  while (std::getline(in, line)) {
    if (!inside) {
      inside = line == "```console";
    } else if (line == "```") {
      inside = false;
    } else if (line.rfind("$ ", 0) == 0) {
      steps.push_back({line.substr(2), {}});
    } else if (!steps.empty()) {
      steps.back().expected += line + "\n";
    }
  }
  return steps;
}

TEST(Docs, ConsoleBlocksReplay) {
  const fs::path root = TPM_SOURCE_DIR;
  std::vector<fs::path> pages = {root / "README.md"};
  for (const auto& entry : fs::directory_iterator(root / "docs"))
    if (entry.path().extension() == ".md") pages.push_back(entry.path());
  const std::regex tool_word(R"((^|\| |&& |; )tpm )");
  const std::string quoted_tool = std::string("$1\"") + TPM_CLI_PATH + "\" ";
  std::size_t replayed = 0;
  for (const auto& page : pages) {
    const fs::path dir = fs::temp_directory_path() / ("tpm-docs-" + page.stem().string());
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::create_directory_symlink(root / "tests", dir / "tests");
    for (const auto& step : console_steps(read_file(page))) {
      std::ofstream(dir / "step.sh") << std::regex_replace(step.command, tool_word, quoted_tool) << "\n";
      const std::string cmd = "cd \"" + dir.string() + "\" && sh step.sh > out.txt 2>/dev/null";
      std::system(cmd.c_str());
      EXPECT_EQ(read_file(dir / "out.txt"), step.expected) << page.filename() << ": " << step.command;
      ++replayed;
    }
    fs::remove_all(dir);
  }
  EXPECT_GE(replayed, 15u);
}

}  // namespace
}  // namespace tpm
