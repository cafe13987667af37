#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "config.h"
#include "kvbeam/synthesis.h"

namespace kvbeam::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

// Each command writes below `out` and returns an exit code; errors propagate
// as ValidationError / NumericalError / IoError.
int cmd_design(const ExperimentConfig& cfg, const std::filesystem::path& out);
int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out);
int cmd_compare(const ExperimentConfig& cfg, const std::filesystem::path& out);
int cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& out,
               std::uint64_t seed);
int cmd_matrices(const ExperimentConfig& cfg, const std::filesystem::path& out);

// Controller matrices as stored under <out>/controller.
void save_controller(const std::filesystem::path& dir, const RegulatorRealization& c);
// Throws IoError on unreadable files, ValidationError if the shapes do not
// fit the configured internal model.
RegulatorRealization load_controller(const std::filesystem::path& dir,
                                     const ExperimentConfig& cfg);

// Full command line: parses arguments, runs the subcommand and maps
// exceptions to exit codes.
int run_cli(const std::vector<std::string>& args);

}  // namespace kvbeam::cli
