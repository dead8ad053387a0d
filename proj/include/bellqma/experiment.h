#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bellqma/analysis.h"
#include "bellqma/constraint_graph.h"
#include "bellqma/graph_io.h"
#include "bellqma/protocol_params.h"
#include "bellqma/provers.h"

namespace bellqma::experiment {

enum ExitCode : int { kSuccess = 0, kAuditFailure = 1, kUsageError = 2 };

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A coloring named in the instance file ("planted", ...), "best" for the
/// certify_gap witness, or inline values; `shift` adds a constant mod K. An
/// empty name means "planted" when the instance ships one, else "best".
struct ColoringRef {
    std::string name;
    std::optional<Coloring> values;
    int shift = 0;
};

struct StrategySpec {
    std::string kind = "honest";
    ColoringRef coloring;
    std::vector<ColoringRef> colorings;
    std::optional<std::vector<int>> subset;
    std::optional<double> subset_fraction;  // first ceil(f n) vertices
    int frequency = 1;
    std::optional<std::vector<int>> assignment;  // default: contiguous blocks
    std::vector<std::pair<int, int>> basis;
};

struct ExperimentConfig {
    std::string instance_id;
    std::optional<std::filesystem::path> instance_path;
    std::optional<GeneratorParams> generator;
    StrategySpec strategy;
    std::optional<double> C;  // default: smallest C with C sqrt(n) / (32 K^2) >= max m'
    std::uint64_t trials = 10'000;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::uint64_t gap_budget = 1'000'000;

    std::optional<double> epsilon;
    std::vector<int> lemma3_m_prime;
    std::uint64_t lemma3_trials = 10'000;
    bool audit_chernoff = true;
    bool audit_soundness = true;
    bool audit_second_moment = true;
    ParameterGrid chernoff_grid;

    std::string format = "csv";
    std::optional<std::filesystem::path> out;
    bool dump_states = false;
};

/// Parses the JSON experiment config. Relative instance paths resolve against
/// `base_dir`. Throws ConfigError on any missing or ill-typed field.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig read_config(const std::filesystem::path& path);

struct LoadedInstance {
    std::string id;
    InstanceFile file;
};

LoadedInstance load_instance(const ExperimentConfig& config);
Coloring resolve_coloring(const ColoringRef& ref, const LoadedInstance& instance, std::uint64_t gap_budget);
ProverStrategy resolve_strategy(const StrategySpec& spec, const LoadedInstance& instance, const ProtocolParams& params,
                                std::uint64_t gap_budget);

/// Explicit C, else the smallest C with C sqrt(n) / (32 K^2) >= max(m', 2).
double effective_C(const ExperimentConfig& config, const ConstraintGraph& graph);
/// Explicit epsilon, else eta / 21; eta = 0 falls back to 1 / (21 |E|).
double effective_epsilon(const ExperimentConfig& config, const LoadedInstance& instance);

/// One parameter axis: "C", "trials", "m_prime", or "strategy.frequency" /
/// "strategy.subset_fraction".
struct SweepGrid {
    std::string parameter;
    std::vector<double> values;
};

/// "name=v1,v2,...". Throws ConfigError on an empty or malformed grid.
SweepGrid parse_grid(std::string_view spec);

int cmd_validate(const std::filesystem::path& file, std::uint64_t gap_budget, std::ostream& out, std::ostream& err);
int cmd_generate(const GeneratorParams& params, const std::optional<std::filesystem::path>& out_path, std::ostream& out,
                 std::ostream& err);
int cmd_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const ExperimentConfig& config, const SweepGrid& grid, const std::optional<std::filesystem::path>& plot,
              std::ostream& out, std::ostream& err);
int cmd_audit(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Full command-line entry point (argv[0] is the program name).
int main_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bellqma::experiment
