#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varnet/problems.hpp"
#include "varnet/training.hpp"

namespace varnet::cli {

/// Raw option values as given on the command line or in a config file;
/// unset fields fall back (flags > config file > problem defaults).
struct Options {
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<std::string> dims;  // "1,10,1"
    std::optional<int> points;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> activation;
    std::optional<std::string> final_activation;
    std::optional<std::string> combinator;
    std::vector<std::string> schedulers;
    std::vector<std::string> callbacks;
    std::optional<std::string> out;
    std::optional<std::string> save_model;
    std::optional<std::string> init_model;  // resume from a saved model
    std::optional<int> log_every;
    std::optional<bool> quiet;
};

/// Parses a JSON config file whose keys mirror the long flag names with
/// dashes replaced by underscores.
Options options_from_json_file(const std::string& path);

/// Field-wise fallback: any field unset in `primary` is taken from `fallback`.
Options merge(Options primary, const Options& fallback);

/// Fully resolved run description (problem defaults and the VARNET_SEED
/// fallback applied).
struct RunConfig {
    std::string problem;
    int epochs = 0;
    double lr = 0.0;
    std::vector<int> dims;
    int points = 0;
    std::uint64_t seed = 1;
    std::string activation;
    std::string final_activation = "identity";
    std::string combinator;
    std::vector<std::string> schedulers;
    std::vector<std::string> callbacks;
    std::string out;
    std::string save_model;
    std::string init_model;
    int log_every = 0;
    bool quiet = false;
};

RunConfig resolve(const std::string& problem_name, const Options& opts);

/// "name:key=value,..." factories for schedulers and callbacks.
std::shared_ptr<Scheduler> parse_scheduler(const std::string& spec);
std::shared_ptr<Callback> parse_callback(const std::string& spec);

std::vector<int> parse_dims(const std::string& spec);

/// Prediction CSV for a model under a problem: columns
/// x_0..x_{n-1},y_0..y_{m-1}[,y_true_*,sq_error,loss_density], floats at 17
/// significant digits, LF endings. Returns the file content.
std::string render_csv(const problems::Problem& problem, const Model& model);

/// Sidecar document with the resolved config and the final loss breakdown.
std::string render_meta(const RunConfig& cfg, const problems::Problem& problem,
                        const Model& model, const LossBreakdown& breakdown,
                        const std::string& halt, int epochs_run);

/// Subcommand drivers; return the process exit code (0 ok, 1 unknown
/// problem, 2 config/file error, 3 training halted by TerminateIf).
int run_solve(const std::string& problem_name, const Options& opts, std::ostream& out,
              std::ostream& err);
int run_eval(const std::string& model_path, const std::string& problem_name,
             const std::optional<std::string>& out_path, std::ostream& out, std::ostream& err);
int run_list(bool as_json, std::ostream& out);

}  // namespace varnet::cli
