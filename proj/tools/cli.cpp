#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "ocpscan/analysis.hpp"
#include "ocpscan/error.hpp"
#include "ocpscan/hex.hpp"
#include "ocpscan/params.hpp"
#include "ocpscan/sweep.hpp"
#include "ocpscan/synthgen.hpp"
#ifdef OCPSCAN_WITH_SERVICE
#include "ocpscan/service.hpp"
#endif

namespace ocpscan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

/// Analysis parameter flags, kept as text so that hex and decimal are
/// parsed by the same code path as JSON input.
struct ParamFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> flagOptions;
  std::string configPath;
  bool strict = false;

  void attach(CLI::App& app) {
    for (const char* name :
         {"instructionLength", "retOpcodeLength", "callOpcodeLength", "fileOffset",
          "fileOffsetEnd", "pcOffset", "pcIncPerInstr", "nrCandidates", "callCandidateRange",
          "retCandidateRange", "returnToFunctionPrologueDistance"}) {
      app.add_option(std::string("--") + name, values[name]);
    }
    app.add_option("--endiannes,--endianness", values["endiannes"], "big or little");
    for (const char* name : {"unknownCodeEntry", "includeInstructions", "isRelativeAddressing"}) {
      flagOptions[name] = app.add_flag(std::string("--") + name, flags[name]);
    }
    app.add_option("--config", configPath, "JSON file with parameters; flags take precedence")
        ->check(CLI::ExistingFile);
    app.add_flag("--strict", strict, "require every parameter (no defaults)");
  }

  json merged() const {
    json object = json::object();
    if (!configPath.empty()) {
      std::ifstream in(configPath);
      try {
        object = json::parse(in);
      } catch (const json::parse_error& e) {
        throw Error("cannot parse config " + configPath + ": " + e.what());
      }
      if (!object.is_object()) throw Error("config " + configPath + " must hold a JSON object");
    }
    for (const auto& [name, text] : values) {
      if (text.empty()) continue;
      if (name == "endiannes") {
        object.erase("endianness");
        object["endiannes"] = text;
      } else {
        object[name] = text;
      }
    }
    for (const auto& [name, option] : flagOptions) {
      if (option->count() > 0) object[name] = flags.at(name);
    }
    return object;
  }

  AnalysisParams params() const {
    return params_from_json(merged(), strict ? ParamProfile::strict : ParamProfile::defaulted);
  }
};

std::vector<std::uint64_t> parse_values(const std::string& list) {
  std::vector<std::uint64_t> values;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto item = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) values.push_back(parse_uint(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (values.empty()) throw ValidationError("values", "needs at least one value");
  return values;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

#ifdef OCPSCAN_WITH_SERVICE
Service* g_service = nullptr;
extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}
#endif

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detect call/return opcodes and call graphs in binaries of unknown fixed-width ISAs"};
  app.name("ocpscan");
  app.require_subcommand(1);

  // analyze
  ParamFlags analyzeFlags;
  std::string analyzeBinary, dotDir, sweepName, sweepValues, sweepFormat = "csv";
  std::size_t topN = 1;
  unsigned threads = 0;
  auto* analyze = app.add_subcommand("analyze", "rank candidate opcode pairs and build call graphs");
  analyze->add_option("binary", analyzeBinary)->required();
  analyzeFlags.attach(*analyze);
  analyze->add_option("--dot", dotDir, "write candidate_<rank>.dot files into this directory");
  analyze->add_option("--threads", threads, "worker threads (0 = all cores)");
  analyze->add_option("--sweep", sweepName,
                      "sweep one parameter instead: instructionLength, callOpcodeLength, "
                      "retOpcodeLength, pcOffset, returnToFunctionPrologueDistance");
  analyze->add_option("--values", sweepValues, "comma separated sweep values (hex or decimal)");
  analyze->add_option("--top-n", topN, "best scores recorded per sweep value");
  analyze->add_option("--format", sweepFormat, "sweep output: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  // search-region
  ParamFlags regionFlags;
  std::string regionBinary;
  std::size_t step = 0, limit = 10;
  auto* region = app.add_subcommand("search-region", "search the file for the best code region");
  region->add_option("binary", regionBinary)->required();
  regionFlags.attach(*region);
  region->add_option("--step", step, "coarse grid step in bytes (default: file size / 32)");
  region->add_option("--limit", limit, "number of regions to print");

  // synth
  SynthSpec synth;
  std::string synthOut, addressing = "absolute", endian = "big", callOp, retOp, pcOffset;
  auto* synthCmd = app.add_subcommand("synth", "write a synthetic binary with planted ground truth");
  synthCmd->add_option("output", synthOut)->required();
  synthCmd->add_option("--instructionLength", synth.instructionLength);
  synthCmd->add_option("--callOpcodeLength", synth.callOpcodeLength);
  synthCmd->add_option("--retOpcodeLength", synth.retOpcodeLength);
  synthCmd->add_option("--callOpcode", callOp, "canonical call opcode (hex)");
  synthCmd->add_option("--retOpcode", retOp, "canonical return opcode (hex)");
  synthCmd->add_option("--functions", synth.functionCount);
  synthCmd->add_option("--min-calls", synth.callsPerFunction.min);
  synthCmd->add_option("--max-calls", synth.callsPerFunction.max);
  synthCmd->add_option("--uncalled-leading", synth.uncalledLeadingFunctions);
  synthCmd->add_option("--padding", synth.epiloguePadding.max, "max filler after each return");
  synthCmd->add_option("--addressing", addressing)->check(CLI::IsMember({"absolute", "relative"}));
  synthCmd->add_option("--pcOffset", pcOffset);
  synthCmd->add_option("--pcIncPerInstr", synth.pcIncPerInstr);
  synthCmd->add_option("--noise", synth.noiseRatio);
  synthCmd->add_option("--endianness", endian)->check(CLI::IsMember({"big", "little"}));
  synthCmd->add_option("--seed", synth.seed);
  synthCmd->add_option("--leading-junk", synth.leadingJunkInstructions);
  synthCmd->add_option("--trailing-junk", synth.trailingJunkInstructions);

#ifdef OCPSCAN_WITH_SERVICE
  ServiceConfig serviceConfig;
  std::string host = "127.0.0.1", storage;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--storage-dir", storage, "defaults to $OCPSCAN_STORAGE_DIR or ./ocpscan-store");
  serve->add_option("--max-upload-bytes", serviceConfig.maxUploadBytes);
  serve->add_option("--workers", serviceConfig.workerThreads);
#endif

  try {
    std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(reversed.begin(), reversed.end());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*analyze) {
      const auto params = analyzeFlags.params();
      const auto image = load_image(analyzeBinary);
      const ScoreOptions options{threads};
      if (!sweepName.empty()) {
        SweepSpec spec{parse_sweep_parameter(sweepName), parse_values(sweepValues), topN};
        const auto result = run_sweep(image, params, spec, options);
        out << (sweepFormat == "csv" ? sweep_to_csv(result) : to_json(result).dump(2) + "\n");
        return 0;
      }
      const auto result = ocpscan::analyze(image, params, options);
      if (!dotDir.empty()) {
        fs::create_directories(dotDir);
        for (std::size_t k = 0; k < result.candidates.size(); ++k) {
          write_text(fs::path(dotDir) / ("candidate_" + std::to_string(k) + ".dot"),
                     export_graph(result.candidates[k].graph, GraphFormat::dot));
        }
      }
      out << serialize(result);
      return 0;
    }
    if (*region) {
      const auto params = regionFlags.params();
      const auto image = load_image(regionBinary);
      const std::size_t granularity =
          step ? step : default_region_granularity(image.size(), params.instructionLength);
      const auto regions = search_code_region(image, params, granularity);
      json list = json::array();
      for (std::size_t i = 0; i < std::min(limit, regions.size()); ++i) {
        list.push_back(to_json(regions[i], params.instructionLength));
      }
      out << json{{"stepGranularity", granularity}, {"evaluatedRegions", regions.size()},
                  {"regions", list}}.dump(2)
          << "\n";
      return 0;
    }
    if (*synthCmd) {
      synth.addressing = addressing == "relative" ? AddressingMode::relative : AddressingMode::absolute;
      synth.endianness = parse_endianness(endian);
      if (!callOp.empty()) synth.callOpcode = parse_uint(callOp);
      if (!retOp.empty()) synth.retOpcode = parse_uint(retOp);
      if (!pcOffset.empty()) synth.pcOffset = parse_uint(pcOffset);
      synth.callsPerFunction.max = std::max(synth.callsPerFunction.max, synth.callsPerFunction.min);
      const auto binary = generate(synth);
      write_synth(binary, synthOut);
      out << to_json(binary.truth.params).dump(2) << "\n";
      return 0;
    }
#ifdef OCPSCAN_WITH_SERVICE
    if (*serve) {
      if (!storage.empty()) serviceConfig.storageDir = storage;
      Service service(serviceConfig);
      if (!service.bind(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      err << "ocpscan service listening on http://" << host << ":" << port << " (storage "
          << serviceConfig.storageDir.string() << ")\n";
      service.serve();
      g_service = nullptr;
      return 0;
    }
#endif
  } catch (const ValidationError& e) {
    err << error_json(e).dump() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << error_json(e).dump() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace ocpscan::cli
