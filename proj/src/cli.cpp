#include "varnet/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "varnet/errors.hpp"
#include "varnet/math.hpp"
#include "varnet/util.hpp"

namespace varnet::cli {

namespace {

using nlohmann::json;

std::map<std::string, std::string> parse_kv(const std::string& body) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            kv[item] = "1";
        } else {
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    return kv;
}

double kv_num(const std::map<std::string, std::string>& kv, const std::string& key,
              std::optional<double> fallback = std::nullopt) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        if (fallback) return *fallback;
        throw ParseError("missing '" + key + "' in spec");
    }
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ParseError("bad numeric value for '" + key + "'");
    }
}

bool kv_flag(const std::map<std::string, std::string>& kv, const std::string& key,
             bool fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    return it->second != "0" && it->second != "false";
}

}  // namespace

Options options_from_json_file(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(std::string("config file is not valid JSON: ") + e.what());
    }
    Options o;
    try {
        if (doc.contains("epochs")) o.epochs = doc["epochs"].get<int>();
        if (doc.contains("lr")) o.lr = doc["lr"].get<double>();
        if (doc.contains("dims")) {
            if (doc["dims"].is_string()) {
                o.dims = doc["dims"].get<std::string>();
            } else {
                std::string joined;
                for (const auto& d : doc["dims"]) {
                    if (!joined.empty()) joined += ',';
                    joined += std::to_string(d.get<int>());
                }
                o.dims = joined;
            }
        }
        if (doc.contains("points")) o.points = doc["points"].get<int>();
        if (doc.contains("seed")) o.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("activation")) o.activation = doc["activation"].get<std::string>();
        if (doc.contains("final_activation")) {
            o.final_activation = doc["final_activation"].get<std::string>();
        }
        if (doc.contains("combinator")) o.combinator = doc["combinator"].get<std::string>();
        if (doc.contains("schedulers")) {
            for (const auto& s : doc["schedulers"]) o.schedulers.push_back(s.get<std::string>());
        }
        if (doc.contains("callbacks")) {
            for (const auto& c : doc["callbacks"]) o.callbacks.push_back(c.get<std::string>());
        }
        if (doc.contains("out")) o.out = doc["out"].get<std::string>();
        if (doc.contains("save_model")) o.save_model = doc["save_model"].get<std::string>();
        if (doc.contains("init_model")) o.init_model = doc["init_model"].get<std::string>();
        if (doc.contains("log_every")) o.log_every = doc["log_every"].get<int>();
        if (doc.contains("quiet")) o.quiet = doc["quiet"].get<bool>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed config value: ") + e.what());
    }
    return o;
}

Options merge(Options primary, const Options& fallback) {
    if (!primary.epochs) primary.epochs = fallback.epochs;
    if (!primary.lr) primary.lr = fallback.lr;
    if (!primary.dims) primary.dims = fallback.dims;
    if (!primary.points) primary.points = fallback.points;
    if (!primary.seed) primary.seed = fallback.seed;
    if (!primary.activation) primary.activation = fallback.activation;
    if (!primary.final_activation) primary.final_activation = fallback.final_activation;
    if (!primary.combinator) primary.combinator = fallback.combinator;
    if (primary.schedulers.empty()) primary.schedulers = fallback.schedulers;
    if (primary.callbacks.empty()) primary.callbacks = fallback.callbacks;
    if (!primary.out) primary.out = fallback.out;
    if (!primary.save_model) primary.save_model = fallback.save_model;
    if (!primary.init_model) primary.init_model = fallback.init_model;
    if (!primary.log_every) primary.log_every = fallback.log_every;
    if (!primary.quiet) primary.quiet = fallback.quiet;
    return primary;
}

std::vector<int> parse_dims(const std::string& spec) {
    std::vector<int> dims;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            dims.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ParseError("bad dims entry '" + item + "'");
        }
    }
    if (dims.size() < 2) throw ParseError("dims needs at least two entries");
    return dims;
}

RunConfig resolve(const std::string& problem_name, const Options& opts) {
    const problems::Problem defaults = problems::make(problem_name, opts.points);

    RunConfig cfg;
    cfg.problem = problem_name;
    cfg.epochs = opts.epochs.value_or(defaults.default_epochs);
    if (cfg.epochs < 0) throw ParseError("epochs must be >= 0");
    cfg.lr = opts.lr.value_or(defaults.default_lr);
    if (!(cfg.lr > 0.0)) throw ParseError("lr must be > 0");
    cfg.dims = opts.dims ? parse_dims(*opts.dims) : defaults.dims;
    cfg.points = defaults.train.domain.axes()[0].count;
    if (opts.seed) {
        cfg.seed = *opts.seed;
    } else if (const char* env = std::getenv("VARNET_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw ParseError("VARNET_SEED is not a valid integer");
        }
    } else {
        cfg.seed = 1;
    }
    cfg.activation = opts.activation.value_or(to_string(defaults.hidden));
    cfg.final_activation = opts.final_activation.value_or(to_string(defaults.final_act));
    cfg.combinator = opts.combinator.value_or(to_string(defaults.train.combinator));
    (void)activation_from_string(cfg.activation);        // validate early
    (void)activation_from_string(cfg.final_activation);  // validate early
    (void)combinator_from_string(cfg.combinator);
    cfg.schedulers = opts.schedulers.empty() ? defaults.default_schedulers : opts.schedulers;
    cfg.callbacks = opts.callbacks;
    for (const auto& s : cfg.schedulers) (void)parse_scheduler(s);
    for (const auto& c : cfg.callbacks) (void)parse_callback(c);
    cfg.out = opts.out.value_or("");
    cfg.save_model = opts.save_model.value_or("");
    cfg.init_model = opts.init_model.value_or("");
    cfg.log_every = opts.log_every.value_or(0);
    if (cfg.log_every < 0) throw ParseError("log-every must be >= 0");
    cfg.quiet = opts.quiet.value_or(false);
    return cfg;
}

std::shared_ptr<Scheduler> parse_scheduler(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const auto kv = parse_kv(colon == std::string::npos ? "" : spec.substr(colon + 1));
    if (name == "exponential") {
        return std::make_shared<ExponentialLRDecay>(kv_num(kv, "rate"),
                                                    static_cast<int>(kv_num(kv, "steps")));
    }
    if (name == "inverse-time") {
        return std::make_shared<InverseTimeDecay>(kv_num(kv, "rate"),
                                                  static_cast<int>(kv_num(kv, "steps")));
    }
    if (name == "polynomial") {
        return std::make_shared<PolynomialDecay>(kv_num(kv, "min"),
                                                 static_cast<int>(kv_num(kv, "steps")),
                                                 kv_num(kv, "power", 1.0));
    }
    if (name == "plateau") {
        return std::make_shared<ReduceLROnPlateau>(static_cast<int>(kv_num(kv, "patience")),
                                                   kv_num(kv, "min_delta", 0.0),
                                                   kv_num(kv, "factor", 0.5));
    }
    if (name == "control-loss-std") {
        return std::make_shared<ControlLossSTD>(static_cast<int>(kv_num(kv, "window")),
                                                kv_num(kv, "threshold"),
                                                kv_num(kv, "scale", 0.5));
    }
    throw ParseError("unknown scheduler '" + name + "'");
}

std::shared_ptr<Callback> parse_callback(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const auto kv = parse_kv(colon == std::string::npos ? "" : spec.substr(colon + 1));
    if (name == "early-stopping") {
        std::optional<double> target;
        if (kv.count("target")) target = kv_num(kv, "target");
        return std::make_shared<EarlyStopping>(static_cast<int>(kv_num(kv, "patience", 100.0)),
                                               kv_num(kv, "min_delta", 0.0), target);
    }
    if (name == "terminate-if") {
        std::optional<int> window;
        if (kv.count("increasing")) window = static_cast<int>(kv_num(kv, "increasing"));
        return std::make_shared<TerminateIf>(kv_flag(kv, "nan", true), kv_flag(kv, "inf", true),
                                             window);
    }
    if (name == "save-model") {
        auto it = kv.find("path");
        if (it == kv.end()) throw ParseError("save-model needs path=...");
        return std::make_shared<SaveModel>(it->second, kv_flag(kv, "best_only", true));
    }
    throw ParseError("unknown callback '" + name + "'");
}

std::string render_csv(const problems::Problem& problem, const Model& model) {
    const Box& domain = problem.train.domain;
    const int n = domain.input_dim();
    const int m = model.output_dim();
    const bool has_truth = static_cast<bool>(problem.analytic);
    const bool has_density = problem.train.is_solver();

    std::vector<double> density;
    NdArray<double> prediction;
    if (has_density) {
        (void)evaluate_breakdown(problem.train, model, &density);
    }
    evaluate_outputs(problem.train, model, &prediction, nullptr);

    std::ostringstream out;
    for (int i = 0; i < n; ++i) out << (i ? "," : "") << "x_" << i;
    for (int j = 0; j < m; ++j) out << ",y_" << j;
    if (has_truth) {
        for (int j = 0; j < m; ++j) out << ",y_true_" << j;
        out << ",sq_error";
    }
    if (has_density) out << ",loss_density";
    out << '\n';

    for (int t = 0; t < domain.num_points(); ++t) {
        for (int i = 0; i < n; ++i) {
            out << (i ? "," : "") << format_full(domain.points()(t, i));
        }
        for (int j = 0; j < m; ++j) out << ',' << format_full(prediction(t, j));
        if (has_truth) {
            const std::vector<double> truth = problem.analytic(domain.point(t));
            double sq = 0.0;
            for (int j = 0; j < m; ++j) {
                out << ',' << format_full(truth[static_cast<std::size_t>(j)]);
                const double d = prediction(t, j) - truth[static_cast<std::size_t>(j)];
                sq += d * d;
            }
            out << ',' << format_full(sq);
        }
        if (has_density) out << ',' << format_full(density[static_cast<std::size_t>(t)]);
        out << '\n';
    }
    return out.str();
}

std::string render_meta(const RunConfig& cfg, const problems::Problem& problem,
                        const Model& model, const LossBreakdown& breakdown,
                        const std::string& halt, int epochs_run) {
    json config;
    config["problem"] = cfg.problem;
    config["epochs"] = cfg.epochs;
    config["lr"] = cfg.lr;
    config["dims"] = cfg.dims;
    config["points"] = cfg.points;
    config["seed"] = cfg.seed;
    config["activation"] = cfg.activation;
    config["final_activation"] = cfg.final_activation;
    config["combinator"] = cfg.combinator;
    config["schedulers"] = cfg.schedulers;
    config["callbacks"] = cfg.callbacks;
    config["out"] = cfg.out;
    config["save_model"] = cfg.save_model;
    config["init_model"] = cfg.init_model;
    config["log_every"] = cfg.log_every;
    config["quiet"] = cfg.quiet;

    json result;
    result["total_loss"] = breakdown.total;
    result["halt"] = halt;
    result["epochs_run"] = epochs_run;
    json terms = json::object();
    for (const auto& [name, value] : breakdown.terms) terms[name] = value;
    result["breakdown"] = terms;
    if (problem.diagnostics) {
        FitResult probe;
        evaluate_outputs(problem.train, model, &probe.prediction, &probe.derivatives);
        json diag = json::object();
        for (const auto& [name, value] : problem.diagnostics(probe)) diag[name] = value;
        result["diagnostics"] = diag;
    }

    json doc;
    doc["config"] = config;
    doc["result"] = result;
    return doc.dump(2) + "\n";
}

namespace {

void print_breakdown(std::ostream& out, const LossBreakdown& b) {
    out << "total loss: " << format_full(b.total) << '\n';
    for (const auto& [name, value] : b.terms) {
        out << "  " << name << ": " << format_full(value) << '\n';
    }
}

void print_diagnostics(std::ostream& out, const problems::Problem& problem, const Model& model) {
    if (!problem.diagnostics) return;
    FitResult probe;
    evaluate_outputs(problem.train, model, &probe.prediction, &probe.derivatives);
    for (const auto& [name, value] : problem.diagnostics(probe)) {
        out << "  " << name << ": " << format_full(value) << '\n';
    }
}

void write_artifacts(const RunConfig& cfg, const problems::Problem& problem, const Model& model,
                     const LossBreakdown& breakdown, const std::string& halt, int epochs_run) {
    if (!cfg.out.empty()) {
        atomic_write_file(cfg.out, render_csv(problem, model));
        atomic_write_file(cfg.out + ".meta.json",
                          render_meta(cfg, problem, model, breakdown, halt, epochs_run));
    }
    if (!cfg.save_model.empty()) model.save(cfg.save_model);
}

}  // namespace

int run_solve(const std::string& problem_name, const Options& opts, std::ostream& out,
              std::ostream& err) {
    RunConfig cfg;
    problems::Problem problem;
    try {
        cfg = resolve(problem_name, opts);
        problem = problems::make(problem_name, opts.points);
    } catch (const UnknownProblem& e) {
        err << "error: " << e.what() << "\navailable problems:";
        for (const auto& n : problems::names()) err << ' ' << n;
        err << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    Model model;
    try {
        if (!cfg.init_model.empty()) {
            model = Model::load(cfg.init_model);  // resume: weights from disk
            if (model.input_dim() != problem.train.domain.input_dim()) {
                throw ParseError("initial model input dimension does not match the problem");
            }
        } else {
            model = Model::build(cfg.dims, activation_from_string(cfg.activation),
                                 activation_from_string(cfg.final_activation), cfg.seed);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    FitOptions fit_opts;
    fit_opts.epochs = cfg.epochs;
    fit_opts.adam.lr = cfg.lr;
    fit_opts.verbose = !cfg.quiet;
    fit_opts.log_every = cfg.log_every;
    fit_opts.log = &out;
    problem.train.combinator = combinator_from_string(cfg.combinator);
    for (const auto& s : cfg.schedulers) fit_opts.schedulers.push_back(parse_scheduler(s));
    for (const auto& c : cfg.callbacks) fit_opts.callbacks.push_back(parse_callback(c));

    const FitResult result = fit(problem.train, std::move(model), fit_opts);

    out << "halt: " << to_string(result.halt) << " after " << result.epochs_run << " epochs\n";
    print_breakdown(out, result.breakdown);
    print_diagnostics(out, problem, result.model);
    try {
        write_artifacts(cfg, problem, result.model, result.breakdown, to_string(result.halt),
                        result.epochs_run);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return is_terminate(result.halt) ? 3 : 0;
}

int run_eval(const std::string& model_path, const std::string& problem_name,
             const std::optional<std::string>& out_path, std::ostream& out, std::ostream& err) {
    problems::Problem problem;
    try {
        problem = problems::make(problem_name);
    } catch (const UnknownProblem& e) {
        err << "error: " << e.what() << "\navailable problems:";
        for (const auto& n : problems::names()) err << ' ' << n;
        err << '\n';
        return 1;
    }
    Model model;
    try {
        model = Model::load(model_path);
    } catch (const Error& e) {
        err << "error: cannot load model: " << e.what() << '\n';
        return 2;
    }
    if (model.input_dim() != problem.train.domain.input_dim()) {
        err << "error: model input dimension does not match the problem domain\n";
        return 2;
    }

    std::vector<double> density;
    const LossBreakdown breakdown = evaluate_breakdown(problem.train, model, &density);
    print_breakdown(out, breakdown);
    print_diagnostics(out, problem, model);

    if (out_path) {
        try {
            atomic_write_file(*out_path, render_csv(problem, model));
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return 2;
        }
    }
    return 0;
}

int run_list(bool as_json, std::ostream& out) {
    if (as_json) {
        json doc = json::array();
        for (const auto& name : problems::names()) {
            const problems::Problem p = problems::make(name);
            json entry;
            entry["name"] = p.name;
            entry["summary"] = p.summary;
            entry["dims"] = p.dims;
            entry["points"] = p.train.domain.axes()[0].count;
            entry["epochs"] = p.default_epochs;
            entry["lr"] = p.default_lr;
            entry["kind"] = p.train.is_solver() ? "solver" : "minimizer";
            doc.push_back(entry);
        }
        out << doc.dump(2) << '\n';
    } else {
        for (const auto& name : problems::names()) {
            const problems::Problem p = problems::make(name);
            out << p.name << ": " << p.summary << "\n    dims";
            for (std::size_t i = 0; i < p.dims.size(); ++i) {
                out << (i ? "-" : " ") << p.dims[i];
            }
            out << ", points " << p.train.domain.axes()[0].count << ", epochs "
                << p.default_epochs << ", lr " << p.default_lr << '\n';
        }
    }
    return 0;
}

}  // namespace varnet::cli
