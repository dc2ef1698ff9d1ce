#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sill/ast.hpp"
#include "sill/sigcheck.hpp"
#include "sill/subtype.hpp"

namespace sill {

/// One applied rewriting rule. `subject` is the session channel the rule
/// fires on (for fwd, the forwarder's own channel); `peer` is the partner
/// process's channel when two processes are involved; `fresh` is the channel
/// a spawn or a channel-passing send created.
struct StepEvent {
  enum class Kind : uint8_t {
    Fwd, Spawn, DefUnfold, Close, SendTensor, Select, SendLolli, CaseRecv
  };
  Kind kind;
  Channel subject;
  std::optional<Channel> peer;
  std::optional<std::string> label;
  std::optional<Channel> fresh;
};

const char* kind_name(StepEvent::Kind k);
std::string to_string(const StepEvent& ev);  // "kind subject[,peer][,fresh] [label]"

/// Running processes, each labelled by the channel it provides, plus the
/// session-fidelity monitor state for the channels we can type.
struct Configuration {
  std::map<Channel, TermPtr> procs;
  std::map<Channel, TypeMultiset> monitor;
  uint64_t next_fresh = 1;
};

/// Validates an initial configuration against per-channel declared types:
/// every used channel is provided exactly once, the dependency graph is a
/// forest, every provided channel has a declared type, and each process
/// checks against its channel's type with its children's types as context.
std::vector<Diagnostic> config_check(const Signature& sig,
                                     const std::map<Channel, TermPtr>& procs,
                                     const std::map<Channel, TypePtr>& interface);

/// Configuration with the monitor seeded from the declared types.
Configuration make_configuration(std::map<Channel, TermPtr> procs,
                                 const std::map<Channel, TypePtr>& interface);

/// All redexes currently enabled. Forwards, spawns and unfoldings of defined
/// names always fire; communication needs both endpoints present (a drain
/// process accepts any provider-initiated action on its channel).
std::vector<StepEvent> enabled(const Signature& sig, const Configuration& config);

/// True when the process's next action is on the channel it provides, i.e. it
/// waits on its client. Drains count as poised.
bool poised(const TermPtr& term, Channel offer);

struct FidelityViolation {
  Channel channel;
  StepEvent event;
  TypeMultiset before;
  std::string render() const;
};

/// Advances the monitor over one communication event: every alternative
/// consistent with the observed action steps to its continuation type, the
/// rest are discarded. A violation means no alternative explains the action.
struct FidelityResult {
  std::map<Channel, TypeMultiset> monitor;
  std::optional<FidelityViolation> violation;
};
FidelityResult fidelity_update(const Signature& sig, std::map<Channel, TypeMultiset> monitor,
                               const StepEvent& ev);

/// Applies one enabled event. The returned event has its fresh channel filled
/// in; the violation, if any, comes from the fidelity monitor.
struct StepOutcome {
  Configuration next;
  StepEvent event;
  std::optional<FidelityViolation> violation;
};
StepOutcome step(const Signature& sig, const Configuration& config, const StepEvent& ev);

enum class RunStatus : uint8_t { Poised, Deadlock, FuelExhausted, FidelityViolation };

struct RunResult {
  RunStatus status;
  std::vector<StepEvent> trace;
  std::optional<FidelityViolation> violation;
  Configuration final_config;
};

/// Repeatedly fires a uniformly random enabled event until the configuration
/// is quiescent. Quiescent and all-poised is the good outcome; quiescent with
/// a non-poised process is a deadlock.
RunResult run(const Signature& sig, Configuration config, uint64_t seed, uint64_t fuel);

// Encoders and decoders used as execution oracles and by the command line.
TermPtr encode_nat(uint64_t n, Channel offer);
TermPtr encode_bits(uint64_t n, Channel offer);  // least significant bit first, no leading zeros

/// Labels observed on `start`, following forwarding renames: selected labels,
/// then "end" for close; channel sends appear as "send"/"recv".
std::vector<std::string> observations(const std::vector<StepEvent>& trace, Channel start);

std::optional<uint64_t> decode_nat(const std::vector<std::string>& obs);

struct BitsValue {
  uint64_t value = 0;
  bool standard = false;  // no trailing zero bit before the terminator
};
std::optional<BitsValue> decode_bits(const std::vector<std::string>& obs);

}  // namespace sill
