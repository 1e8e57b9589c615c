#include "ocpscan/synthgen.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>

#include "ocpscan/candidates.hpp"
#include "ocpscan/error.hpp"
#include "ocpscan/hex.hpp"

namespace ocpscan {

namespace {

// std distributions are implementation-defined; these keep output
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  std::size_t in(const CountRange& r) {
    return r.min + static_cast<std::size_t>(below(r.max - r.min + 1));
  }

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

void check_spec(const SynthSpec& s) {
  const auto fail = [](const std::string& why) { throw Error("infeasible synth spec: " + why); };
  if (s.instructionLength < 8 || s.instructionLength > 64 || s.instructionLength % 8 != 0) {
    fail("instructionLength must be a multiple of 8 between 8 and 64");
  }
  if (s.callOpcodeLength == 0 || s.callOpcodeLength >= s.instructionLength) {
    fail("callOpcodeLength must be in [1, instructionLength)");
  }
  if (s.retOpcodeLength == 0 || s.retOpcodeLength > s.instructionLength) {
    fail("retOpcodeLength must be in [1, instructionLength]");
  }
  const OpcodeMaskSpec call{s.callOpcodeLength, s.instructionLength};
  const OpcodeMaskSpec ret{s.retOpcodeLength, s.instructionLength};
  if (mask_opcode(s.callOpcode, call) != s.callOpcode) fail("callOpcode has operand bits set");
  if (mask_opcode(s.retOpcode, ret) != s.retOpcode) fail("retOpcode has operand bits set");
  const OpcodeMaskSpec common{std::min(s.callOpcodeLength, s.retOpcodeLength), s.instructionLength};
  if (mask_opcode(s.callOpcode, common) == mask_opcode(s.retOpcode, common)) {
    fail("call and return opcodes must differ in their shared leading bits");
  }
  if (s.functionCount == 0) fail("functionCount must be at least 1");
  if (s.uncalledLeadingFunctions == 0 || s.uncalledLeadingFunctions > s.functionCount) {
    fail("uncalledLeadingFunctions must be in [1, functionCount]");
  }
  if (s.callsPerFunction.min > s.callsPerFunction.max) fail("callsPerFunction min > max");
  if (s.epiloguePadding.min > s.epiloguePadding.max) fail("epiloguePadding min > max");
  if (!(s.noiseRatio >= 0.0 && s.noiseRatio < 1.0)) fail("noiseRatio must be in [0, 1)");
  if (s.pcIncPerInstr == 0) fail("pcIncPerInstr must be at least 1");
}

enum class Slot { call, noise };

}  // namespace

SynthBinary generate(const SynthSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);
  const OpcodeMaskSpec callSpec{spec.callOpcodeLength, spec.instructionLength};
  const OpcodeMaskSpec retSpec{spec.retOpcodeLength, spec.instructionLength};
  const std::size_t firstCallable = spec.uncalledLeadingFunctions;
  const std::size_t callable = spec.functionCount - firstCallable;

  // Call counts per function, then targets: every callable function once,
  // the remaining calls uniformly.
  std::vector<std::size_t> calls(spec.functionCount, 0);
  std::size_t totalCalls = 0;
  if (callable > 0) {
    for (auto& c : calls) totalCalls += (c = rng.in(spec.callsPerFunction));
    while (totalCalls < callable) {
      ++calls[rng.below(spec.functionCount)];
      ++totalCalls;
    }
  }
  std::vector<std::size_t> targets;
  targets.reserve(totalCalls);
  for (std::size_t f = firstCallable; f < spec.functionCount; ++f) targets.push_back(f);
  while (targets.size() < totalCalls) targets.push_back(firstCallable + rng.below(callable));
  rng.shuffle(targets);

  // Layout: [body (calls and filler, shuffled)] [return] [padding].
  struct Function {
    std::vector<Slot> body;
    std::vector<std::size_t> callTargets;
    std::size_t padding = 0;
    std::size_t entry = 0;
  };
  std::vector<Function> functions(spec.functionCount);
  const double noisePerCode = spec.noiseRatio / (1.0 - spec.noiseRatio);
  std::size_t nextTarget = 0;
  std::size_t cursor = 0;
  for (auto& fn : functions) {
    const std::size_t n = calls[static_cast<std::size_t>(&fn - functions.data())];
    const double expectedNoise = static_cast<double>(n + 1) * noisePerCode;
    auto noise = static_cast<std::size_t>(expectedNoise);
    if (rng.unit() < expectedNoise - static_cast<double>(noise)) ++noise;
    fn.body.assign(n, Slot::call);
    fn.body.insert(fn.body.end(), noise, Slot::noise);
    rng.shuffle(fn.body);
    fn.callTargets.assign(targets.begin() + static_cast<std::ptrdiff_t>(nextTarget),
                          targets.begin() + static_cast<std::ptrdiff_t>(nextTarget + n));
    nextTarget += n;
    fn.padding = rng.in(spec.epiloguePadding);
    fn.entry = cursor;
    cursor += fn.body.size() + 1 + fn.padding;
  }
  const std::size_t count = cursor;
  if (count > 1 && spec.pcIncPerInstr > (std::numeric_limits<std::uint64_t>::max() -
                                         spec.pcOffset) / (count - 1)) {
    throw Error("infeasible synth spec: addresses exceed 2^64-1");
  }

  const std::uint64_t widthMask = callSpec.widthMask();
  const auto address = [&](std::size_t i) { return spec.pcOffset + i * spec.pcIncPerInstr; };
  const auto noiseValue = [&] {
    for (;;) {
      const std::uint64_t v = rng.bits() & widthMask;
      if (mask_opcode(v, callSpec) != spec.callOpcode && mask_opcode(v, retSpec) != spec.retOpcode) {
        return v;
      }
    }
  };
  const unsigned operandBits = callSpec.operandBits();
  const auto encodeCall = [&](std::size_t caller, std::size_t target) {
    std::uint64_t operand = 0;
    if (spec.addressing == AddressingMode::absolute) {
      operand = address(target);
      if (operandBits < 64 && (operand >> operandBits) != 0) {
        throw Error("infeasible synth spec: absolute operand too narrow for address " +
                    to_hex(operand));
      }
    } else {
      const std::uint64_t from = address(caller);
      const std::uint64_t to = address(target);
      const std::uint64_t limit = std::uint64_t{1} << (operandBits - 1);
      const bool forward = to >= from;
      const std::uint64_t distance = forward ? to - from : from - to;
      if (forward ? distance >= limit : distance > limit) {
        throw Error("infeasible synth spec: relative operand too narrow for offset");
      }
      operand = (forward ? distance : std::uint64_t{0} - distance) & callSpec.operandMask();
    }
    return spec.callOpcode | operand;
  };

  GroundTruth truth;
  truth.instructions.resize(count);
  truth.callOpcode = spec.callOpcode;
  truth.retOpcode = spec.retOpcode;
  for (const auto& fn : functions) {
    truth.functionEntries.push_back(fn.entry);
    std::size_t i = fn.entry;
    std::size_t nextCall = 0;
    for (Slot slot : fn.body) {
      if (slot == Slot::call) {
        const std::size_t target = functions[fn.callTargets[nextCall++]].entry;
        truth.instructions[i] = encodeCall(i, target);
        truth.plantedEdges.push_back({i, target, address(i), address(target)});
      } else {
        truth.instructions[i] = noiseValue();
      }
      ++i;
    }
    truth.instructions[i++] = spec.retOpcode | (rng.bits() & retSpec.operandMask());
    for (std::size_t k = 0; k < fn.padding; ++k) truth.instructions[i++] = noiseValue();
  }
  truth.callCount = truth.plantedEdges.size();

  const unsigned width = spec.instructionLength / 8;
  SynthBinary out;
  auto junk = [&](std::size_t instructions) {
    for (std::size_t b = 0; b < instructions * width; ++b) {
      out.image.bytes.push_back(static_cast<std::uint8_t>(rng.bits()));
    }
  };
  junk(spec.leadingJunkInstructions);
  const auto code = encode_instructions(truth.instructions, spec.instructionLength,
                                        spec.endianness);
  const std::size_t codeStart = out.image.bytes.size();
  out.image.bytes.insert(out.image.bytes.end(), code.begin(), code.end());
  junk(spec.trailingJunkInstructions);
  out.image.path = "synthetic:seed=" + std::to_string(spec.seed);

  auto& p = truth.params;
  p.instructionLength = spec.instructionLength;
  p.callOpcodeLength = spec.callOpcodeLength;
  p.retOpcodeLength = spec.retOpcodeLength;
  p.fileOffset = codeStart;
  p.fileOffsetEnd = codeStart + code.size();
  p.pcOffset = spec.pcOffset;
  p.pcIncPerInstr = spec.pcIncPerInstr;
  p.endianness = spec.endianness;
  p.returnToFunctionPrologueDistance = spec.epiloguePadding.max + 1;
  p.isRelativeAddressing = spec.addressing == AddressingMode::relative;
  out.truth = std::move(truth);
  return out;
}

nlohmann::json to_json(const GroundTruth& truth) {
  const unsigned width = truth.params.instructionLength;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : truth.plantedEdges) {
    edges.push_back({{"callerIndex", e.callerIndex},
                     {"targetIndex", e.targetIndex},
                     {"callerAddress", to_hex(e.callerAddress)},
                     {"targetAddress", to_hex(e.targetAddress)}});
  }
  return {
      {"callOpcode", to_hex(truth.callOpcode, width)},
      {"retOpcode", to_hex(truth.retOpcode, width)},
      {"callCount", truth.callCount},
      {"instructionCount", truth.instructions.size()},
      {"functionEntries", truth.functionEntries},
      {"plantedEdges", edges},
      {"params", to_json(truth.params)},
  };
}

void write_synth(const SynthBinary& binary, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(binary.image.bytes.data()),
              static_cast<std::streamsize>(binary.image.bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
  }
  std::ofstream sidecar(path.string() + ".truth.json");
  sidecar << to_json(binary.truth).dump(2) << '\n';
  if (!sidecar) throw Error("cannot write " + path.string() + ".truth.json");
}

}  // namespace ocpscan
