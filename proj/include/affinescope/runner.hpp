#pragma once

#include "affinescope/io.hpp"

#include <map>
#include <optional>
#include <string>

namespace afs {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchemaId = "affinescope.report/1";

struct ExperimentConfig {
    std::string command;
    std::optional<std::string> input;  // AFSC1/CSV path or builtin corpus id
    Json params = Json::object();
    std::uint64_t seed = 0;
    std::string output = "affinescope-out";

    /// Validates against the shipped config schema, including the command's params block.
    static ExperimentConfig from_json(const Json& j);
    /// The echo stored in reports. The output directory is left out so that reruns into
    /// different directories produce identical reports.
    Json echo() const;
};

/// Builtin inputs, "name" or "name:key=value:…":
///   affine:n=2:m=1         seeded affine map, Lipschitz = largest singular value
///   sawtooth:m=3:p=2       the multi-band sawtooth on [−1, 1]
///   tensor:n=2:m=2:p=2:K=1:eps=1
///   radial:n=2             ‖x‖₂
///   random-lip:n=2:seed=7  seeded trigonometric field rescaled to Lipschitz constant 1
///   cutoff:<id>            cutoff_extend of another builtin under the Euclidean norm
/// Every builtin accepts res= (points per axis) and, except cutoff, half= (box half-width).
/// The seed argument is used when the id carries no seed of its own.
GridFunction corpus(const std::string& id, std::uint64_t seed = 0);
bool is_corpus_id(const std::string& input);
GridFunction load_input(const std::string& input, std::uint64_t seed = 0);

struct RunReport {
    Json report;                                // deterministic payload (report.json)
    Json timing;                                // wall time and thread count (timing.json)
    std::map<std::string, std::string> files;   // side tables and plots, name → bytes
};

/// Executes the configured command. `threads` only changes speed, never the output.
RunReport run(const ExperimentConfig& config, int threads = 1);

/// Writes report.json, timing.json and every side file into `directory` (created if needed).
void write_outputs(const RunReport& report, const std::string& directory);

/// CLI exit status: 2 for ValidationError (DomainError included), 3 for NumericalError, 1 otherwise.
int exit_code_of(const std::exception& e);

/// spdlog level from AFFINESCOPE_LOG (trace, debug, info, warn, error, off; default warn).
void configure_logging();

}  // namespace afs
