#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "replaygan/schema.hpp"

namespace replaygan::pipeline {

/// Relative paths of everything a command wrote, manifest included.
struct CommandResult {
    std::string out_dir;
    std::vector<std::string> outputs;
};

struct SimulateOptions {
    std::optional<std::string> config_path;  // SimConfig JSON; omitted = default surrogate
    std::int64_t n_patients = 500;
    std::int64_t length_lo = 10;
    std::int64_t length_hi = 20;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct TrainOptions {
    std::string data_csv;
    std::optional<std::string> config_path;  // TrainConfig JSON
    std::optional<std::string> variant;      // overrides the config file
    std::optional<std::int64_t> epochs;
    std::optional<std::int64_t> batch_size;
    std::optional<std::int64_t> buffer_capacity;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct GenerateOptions {
    std::string checkpoint_path;
    std::int64_t n_patients = 100;
    std::int64_t months = 60;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct EvaluateOptions {
    std::string real_csv;
    std::string syn_csv;
    std::int64_t clusters = 20;
    std::int64_t repeats = 20;
    std::int64_t sample_n = 100000;
    std::int64_t test_iterations = 100;
    std::int64_t test_batch = 32;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct PrivacyOptions {
    std::string real_csv;
    std::string syn_csv;
    std::string out_dir;
};

struct UtilityOptions {
    std::string real_csv;
    std::string syn_csv;
    std::optional<std::string> rl_config_path;  // RLSpec JSON
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct ReportOptions {
    std::string dir;  // directory holding fragments from earlier commands
};

CommandResult cmd_simulate(const SimulateOptions& opt);
CommandResult cmd_train(const TrainOptions& opt);
CommandResult cmd_generate(const GenerateOptions& opt);
CommandResult cmd_evaluate(const EvaluateOptions& opt);
CommandResult cmd_privacy(const PrivacyOptions& opt);
CommandResult cmd_utility(const UtilityOptions& opt);
CommandResult cmd_report(const ReportOptions& opt);

/// The dataset schema all CLI commands validate against.
const VariableSchema& cli_schema();

std::uint64_t file_hash(const std::string& path);

}  // namespace replaygan::pipeline
