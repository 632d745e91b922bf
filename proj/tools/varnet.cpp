#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "varnet/cli.hpp"
#include "varnet/errors.hpp"

namespace vc = varnet::cli;

namespace {

struct SolveArgs {
    std::string problem;
    std::string config_path;
    vc::Options opts;
    std::optional<int> epochs, points, log_every;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    std::string dims, activation, final_activation, combinator, out, save_model, init_model;
    std::vector<std::string> schedulers, callbacks;
    bool quiet = false;
};

vc::Options collect(const SolveArgs& a, const CLI::App& cmd) {
    vc::Options o;
    o.epochs = a.epochs;
    o.lr = a.lr;
    o.points = a.points;
    o.seed = a.seed;
    o.log_every = a.log_every;
    if (!a.dims.empty()) o.dims = a.dims;
    if (!a.activation.empty()) o.activation = a.activation;
    if (!a.final_activation.empty()) o.final_activation = a.final_activation;
    if (!a.combinator.empty()) o.combinator = a.combinator;
    o.schedulers = a.schedulers;
    o.callbacks = a.callbacks;
    if (!a.out.empty()) o.out = a.out;
    if (!a.save_model.empty()) o.save_model = a.save_model;
    if (!a.init_model.empty()) o.init_model = a.init_model;
    if (cmd.count("--quiet") > 0) o.quiet = a.quiet;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"varnet: neural-network solver for differential equations and "
                 "variational problems"};
    app.require_subcommand(1);

    SolveArgs sa;
    CLI::App* solve = app.add_subcommand("solve", "train a registered problem");
    solve->add_option("problem", sa.problem, "problem name (see list-problems)")->required();
    solve->add_option("--epochs", sa.epochs, "training epochs");
    solve->add_option("--lr", sa.lr, "Adam learning rate");
    solve->add_option("--dims", sa.dims, "layer sizes, e.g. 1,10,1");
    solve->add_option("--points", sa.points, "training points per axis");
    solve->add_option("--seed", sa.seed, "RNG seed (default: $VARNET_SEED or 1)");
    solve->add_option("--activation", sa.activation, "hidden activation");
    solve->add_option("--final-activation", sa.final_activation, "output activation");
    solve->add_option("--combinator", sa.combinator,
                      "weighted_sum | sum | one_to_one_mean | one_to_one_sum");
    solve->add_option("--scheduler", sa.schedulers,
                      "scheduler spec, e.g. exponential:rate=0.5,steps=10000");
    solve->add_option("--callback", sa.callbacks,
                      "callback spec, e.g. early-stopping:patience=500,target=1e-8");
    solve->add_option("--out", sa.out, "prediction CSV path (plus <out>.meta.json)");
    solve->add_option("--save-model", sa.save_model, "model JSON path");
    solve->add_option("--init-model", sa.init_model,
                      "start from a saved model instead of a fresh initialization");
    solve->add_option("--log-every", sa.log_every, "epochs between log lines");
    solve->add_flag("--quiet", sa.quiet, "suppress the training log");
    solve->add_option("--config", sa.config_path, "JSON config file (flags win on conflict)");

    std::string eval_model, eval_problem, eval_out;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model without training");
    eval->add_option("--model", eval_model, "model JSON file")->required();
    eval->add_option("--problem", eval_problem, "problem name")->required();
    eval->add_option("--out", eval_out, "prediction CSV path");

    bool list_json = false;
    CLI::App* list = app.add_subcommand("list-problems", "show the problem registry");
    list->add_flag("--json", list_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) {
            vc::Options opts = collect(sa, *solve);
            if (!sa.config_path.empty()) {
                opts = vc::merge(std::move(opts), vc::options_from_json_file(sa.config_path));
            }
            return vc::run_solve(sa.problem, opts, std::cout, std::cerr);
        }
        if (eval->parsed()) {
            std::optional<std::string> out_path;
            if (!eval_out.empty()) out_path = eval_out;
            return vc::run_eval(eval_model, eval_problem, out_path, std::cout, std::cerr);
        }
        return vc::run_list(list_json, std::cout);
    } catch (const varnet::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
