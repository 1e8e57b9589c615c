#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cli.hpp"
#include "ocpscan/analysis.hpp"
#include "ocpscan/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ocpscan;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ocpscan");
  std::ostringstream out, err;
  const int status = ocpscan::cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ocpscan_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string write_program(const TempDir& dir, SynthBinary* out = nullptr) {
  SynthSpec spec;
  spec.functionCount = 12;
  spec.noiseRatio = 0.3;
  spec.seed = 5;
  const auto bin = generate(spec);
  const auto path = (dir.path / "prog.bin").string();
  write_synth(bin, path);
  if (out) *out = bin;
  return path;
}

std::vector<std::string> mips_flags(const SynthBinary& bin) {
  return {"--instructionLength", "32", "--callOpcodeLength", "6", "--retOpcodeLength", "32",
          "--pcOffset", to_json(bin.truth.params).at("pcOffset").get<std::string>(),
          "--returnToFunctionPrologueDistance", "1"};
}

}  // namespace

TEST_CASE("analyze prints the serialized result") {
  TempDir dir;
  SynthBinary bin;
  const auto path = write_program(dir, &bin);
  auto args = mips_flags(bin);
  args.insert(args.begin(), {"analyze", path});
  const auto r = invoke(args);
  REQUIRE(r.status == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("candidates").at(0).at("callOpcode") == "0x0C000000");
  CHECK(j.at("candidates").at(0).at("retOpcode") == "0x03E00008");
  CHECK(j.at("candidates").at(0).at("ocpScore").get<double>() == 1.0);
  CHECK(j.at("candidates").size() == 5);

  const auto direct = analyze(load_image(path), params_from_json(j.at("params")), {1});
  CHECK(r.out == serialize(direct));
}

TEST_CASE("a missing required field exits 2 with a field error") {
  TempDir dir;
  const auto path = write_program(dir);
  const auto r = invoke({"analyze", path, "--instructionLength", "32", "--retOpcodeLength", "32"});
  CHECK(r.status == 2);
  const auto j = json::parse(r.err);
  REQUIRE(j.at("fields").size() == 1);
  CHECK(j.at("fields").at(0).at("field") == "callOpcodeLength");
  CHECK(r.out.empty());
}

TEST_CASE("strict mode requires the region end") {
  TempDir dir;
  const auto path = write_program(dir);
  const json config = {{"instructionLength", 32},
                       {"retOpcodeLength", 32},
                       {"callOpcodeLength", 6},
                       {"fileOffset", 0},
                       {"pcOffset", "0x100000"},
                       {"pcIncPerInstr", 1},
                       {"endiannes", "big"},
                       {"nrCandidates", 5},
                       {"callCandidateRange", {0, 20}},
                       {"retCandidateRange", {0, 10}},
                       {"returnToFunctionPrologueDistance", 3},
                       {"unknownCodeEntry", false},
                       {"includeInstructions", false},
                       {"isRelativeAddressing", false}};
  const auto cfg = dir.path / "params.json";
  std::ofstream(cfg) << config.dump();
  const auto r = invoke({"analyze", path, "--config", cfg.string(), "--strict"});
  CHECK(r.status == 2);
  CHECK(json::parse(r.err).at("fields").at(0).at("field") == "fileOffsetEnd");
  CHECK(invoke({"analyze", path, "--config", cfg.string()}).status == 0);
  CHECK(invoke({"analyze", path, "--config", cfg.string(), "--strict", "--fileOffsetEnd",
             std::to_string(fs::file_size(path))})
            .status == 0);
}

TEST_CASE("flags override the config file") {
  TempDir dir;
  SynthBinary bin;
  const auto path = write_program(dir, &bin);
  const auto cfg = dir.path / "params.json";
  std::ofstream(cfg) << json{{"instructionLength", 32}, {"retOpcodeLength", 32},
                             {"callOpcodeLength", 6}, {"nrCandidates", 2},
                             {"endianness", "little"}}
                            .dump();
  const auto r = invoke({"analyze", path, "--config", cfg.string(), "--nrCandidates", "3",
                      "--endianness", "big", "--includeInstructions"});
  REQUIRE(r.status == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("params").at("nrCandidates") == 3);
  CHECK(j.at("params").at("endiannes") == "big");
  CHECK(j.at("candidates").at(0).at("graph").at("nodes").at(0).contains("instructions"));
}

TEST_CASE("--dot writes one file per candidate") {
  TempDir dir;
  SynthBinary bin;
  const auto path = write_program(dir, &bin);
  auto args = mips_flags(bin);
  const auto dots = dir.path / "dots";
  args.insert(args.begin(), {"analyze", path, "--dot", dots.string(), "--nrCandidates", "3"});
  const auto r = invoke(args);
  REQUIRE(r.status == 0);
  const auto j = json::parse(r.out);
  for (int k = 0; k < 3; ++k) {
    const auto file = dots / ("candidate_" + std::to_string(k) + ".dot");
    REQUIRE(fs::exists(file));
    const auto graph = call_graph_from_json(j.at("candidates").at(k).at("graph"));
    CHECK(read_file(file) == export_graph(graph, GraphFormat::dot));
  }
  CHECK_FALSE(fs::exists(dots / "candidate_3.dot"));
  CHECK(read_file(dots / "candidate_0.dot").rfind("digraph callgraph {", 0) == 0);
}

TEST_CASE("--sweep emits CSV") {
  TempDir dir;
  SynthBinary bin;
  const auto path = write_program(dir, &bin);
  auto args = mips_flags(bin);
  args.insert(args.begin(), {"analyze", path, "--sweep", "pcOffset", "--values",
                             "0,0x100000,0x200000", "--top-n", "2"});
  const auto r = invoke(args);
  REQUIRE(r.status == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "value,rank,score,callOpcode,retOpcode");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 6);
  CHECK(r.out.find("\n1048576,0,1.000000,0x0C000000,0x03E00008\n") != std::string::npos);

  args.push_back("--format");
  args.push_back("json");
  const auto j = json::parse(invoke(args).out);
  CHECK(j.at("points").size() == 3);
  CHECK(invoke({"analyze", path, "--instructionLength", "32", "--callOpcodeLength", "6",
             "--retOpcodeLength", "32", "--sweep", "nrCandidates", "--values", "1"})
            .status == 2);
}

TEST_CASE("synth and search-region subcommands") {
  TempDir dir;
  const auto out = (dir.path / "s.bin").string();
  auto r = invoke({"synth", out, "--functions", "30", "--leading-junk", "40", "--trailing-junk", "40",
                "--pcOffset", "0", "--seed", "3"});
  REQUIRE(r.status == 0);
  CHECK(fs::exists(out + ".truth.json"));
  const auto truth = json::parse(read_file(out + ".truth.json"));
  r = invoke({"search-region", out, "--instructionLength", "32", "--callOpcodeLength", "6",
           "--retOpcodeLength", "32", "--returnToFunctionPrologueDistance", "1", "--limit", "2"});
  REQUIRE(r.status == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("regions").size() == 2);
  CHECK(j.at("regions").at(0).at("callOpcode") == "0x0C000000");
  CHECK(truth.at("params").at("fileOffset") == 160);
}

TEST_CASE("unreadable input and parse errors") {
  CHECK(invoke({"analyze", "/nonexistent/file", "--instructionLength", "32", "--callOpcodeLength",
             "6", "--retOpcodeLength", "32"})
            .status == 1);
  CHECK(invoke({}).status != 0);
  CHECK(invoke({"frobnicate"}).status != 0);
}

TEST_CASE("the executable reports exit codes") {
  TempDir dir;
  const auto path = write_program(dir);
  const std::string cmd = std::string(OCPSCAN_CLI_PATH) + " analyze " + path +
                          " --instructionLength 32 --retOpcodeLength 32 > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
}
