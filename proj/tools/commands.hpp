#pragma once

#include "popgcn/dap.hpp"
#include "popgcn/dataset.hpp"
#include "popgcn/model.hpp"
#include "popgcn/synthetic.hpp"
#include "popgcn/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace popgcn::cli {

/// Everything a pipeline stage needs. Loaded from a flat "key = value" file
/// and then overridden from the command line.
struct RunConfig {
  // prepare
  std::filesystem::path input;
  DelimiterSpec delimiter;
  SplitRatios ratios;
  std::uint64_t split_seed = 2023;

  // synth
  SyntheticSpec synthetic;

  // locations; empty means "derive from out"
  std::filesystem::path out = "run";
  std::filesystem::path split_dir;
  std::filesystem::path checkpoint;

  ModelConfig model;
  TrainConfig train;
  bool resume = false;

  // eval
  bool dap = false;
  DapConfig dap_base;
  std::string variant;
  std::vector<double> alphas{0.0};
  std::vector<double> betas{0.0};
  std::vector<Index> clusters{10};
  std::vector<std::size_t> ks{20};

  // diagnose
  Index groups = 10;
  std::vector<Index> depth_layers;

  std::filesystem::path resolved_split_dir() const;
  std::filesystem::path resolved_checkpoint() const;
};

/// Applies one key/value pair. Throws Error naming the key on bad input.
void set_option(RunConfig& config, const std::string& key, const std::string& value);

/// Parses "key = value" lines ('#' starts a comment). Errors carry the line.
void apply_config_text(RunConfig& config, const std::string& text, const std::string& source);

RunConfig load_config(const std::filesystem::path& path);

/// "a,b,c" where each element is a number or an inclusive "start:stop:step" range.
std::vector<double> parse_number_list(const std::string& text);

/// Canonical key = value dump of the settings that influence results
/// (paths excluded), used for hashing and for sidecar files.
std::string canonical_config(const RunConfig& config);
std::string config_hash(const RunConfig& config);

/// Stages. Each writes its artifacts and throws Error on failure.
void cmd_synth(const RunConfig& config);
void cmd_prepare(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_diagnose(const RunConfig& config);

/// Full command-line entry point; returns the process exit code
/// (0 success, 1 runtime failure, 2 usage error).
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace popgcn::cli
