#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gendisc/generator.hpp"

namespace gendisc::cli {

enum ExitCode : int { Pass = 0, AssertionFailure = 1, ConfigFailure = 2, PreconditionFailure = 3 };

struct ExperimentConfig {
    std::string task;  ///< solve-average | solve-risk | evaluate | verify | ldp-check | sweep-gamma | gen-model
    std::optional<std::string> model_path;
    std::optional<GeneratorSpec> generator;
    std::string schedule = "hyperbolic:1:1";
    std::optional<double> gamma;
    Index k = 0;
    std::optional<Index> horizon;
    std::vector<Index> horizons;
    std::vector<double> gammas;
    double eps = 0.1;
    double tol = 1e-12;
    std::uint64_t seed = 0;
    Index panel_size = 100;
    Index reps = 0;
    std::vector<double> f;
    std::vector<double> kappas;
    std::vector<Index> n_grid;
    std::vector<Index> policy;
    std::optional<std::string> out_dir;
};

/// Overwrites every field present in `doc`; unknown fields raise ConfigError.
void apply_config(ExperimentConfig& config, const nlohmann::json& doc);

/// Runs one task, prints the JSON report to `out` and writes artifacts under
/// out_dir. Returns the exit status.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Command-line entry point (argv[0] is the program name).
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace gendisc::cli
