#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "varnet/cli.hpp"
#include "varnet/util.hpp"

using namespace varnet;
namespace vc = varnet::cli;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

#ifndef VARNET_CLI_PATH
#define VARNET_CLI_PATH "varnet"
#endif

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VARNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path tmp_file(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("dims parsing") {
    CHECK(vc::parse_dims("1,10,1") == std::vector<int>{1, 10, 1});
    CHECK_THROWS_AS(vc::parse_dims("1"), ParseError);
    CHECK_THROWS_AS(vc::parse_dims("1,x,1"), ParseError);
}

TEST_CASE("scheduler and callback spec parsing") {
    CHECK(vc::parse_scheduler("exponential:rate=0.5,steps=100")->name() == "exponential");
    CHECK(vc::parse_scheduler("inverse-time:rate=9,steps=10")->name() == "inverse_time");
    CHECK(vc::parse_scheduler("polynomial:min=1e-5,steps=100,power=2")->name() == "polynomial");
    CHECK(vc::parse_scheduler("plateau:patience=10")->name() == "plateau");
    CHECK(vc::parse_scheduler("control-loss-std:window=10,threshold=0.5")->name() ==
          "control_loss_std");
    CHECK_THROWS_AS(vc::parse_scheduler("warp:x=1"), ParseError);
    CHECK_THROWS_AS(vc::parse_scheduler("exponential:rate=0.5"), ParseError);  // missing steps

    CHECK(vc::parse_callback("early-stopping:patience=5,target=1e-8") != nullptr);
    CHECK(vc::parse_callback("terminate-if") != nullptr);
    CHECK(vc::parse_callback("save-model:path=/tmp/x.json,best_only=1") != nullptr);
    CHECK_THROWS_AS(vc::parse_callback("save-model"), ParseError);
    CHECK_THROWS_AS(vc::parse_callback("nosuch"), ParseError);
}

TEST_CASE("config file merge: flags win") {
    const fs::path cfg = tmp_file("varnet_cfg_test.json");
    {
        std::ofstream out(cfg);
        out << R"({"epochs": 500, "lr": 0.5, "dims": [1, 4, 1], "seed": 9,
                   "callbacks": ["terminate-if"], "quiet": true})";
    }
    vc::Options from_file = vc::options_from_json_file(cfg.string());
    CHECK(from_file.epochs == 500);
    CHECK(from_file.dims == "1,4,1");
    CHECK(from_file.quiet == true);

    vc::Options flags;
    flags.epochs = 7;  // flag beats file
    vc::Options merged = vc::merge(flags, from_file);
    CHECK(merged.epochs == 7);
    CHECK(merged.lr == 0.5);
    CHECK(merged.seed == 9);
    CHECK(merged.callbacks == std::vector<std::string>{"terminate-if"});
    fs::remove(cfg);

    CHECK_THROWS_AS(vc::options_from_json_file("/nonexistent/cfg.json"), Error);
    const fs::path bad = tmp_file("varnet_bad_cfg.json");
    {
        std::ofstream out(bad);
        out << "{ nope";
    }
    CHECK_THROWS_AS(vc::options_from_json_file(bad.string()), ParseError);
    fs::remove(bad);
}

TEST_CASE("resolve fills defaults from the problem registry") {
    vc::Options empty;
    unsetenv("VARNET_SEED");
    vc::RunConfig cfg = vc::resolve("qho", empty);
    CHECK(cfg.epochs == 60000);
    CHECK(cfg.lr == 1e-3);
    CHECK(cfg.dims == std::vector<int>{1, 10, 1});
    CHECK(cfg.points == 100);
    CHECK(cfg.seed == 1);
    CHECK(cfg.activation == "sigmoid");
    CHECK(cfg.combinator == "weighted_sum");

    setenv("VARNET_SEED", "42", 1);
    CHECK(vc::resolve("qho", empty).seed == 42);
    vc::Options with_seed;
    with_seed.seed = 7;
    CHECK(vc::resolve("qho", with_seed).seed == 7);  // flag beats env
    unsetenv("VARNET_SEED");

    CHECK_THROWS_AS(vc::resolve("nosuch", empty), UnknownProblem);
    vc::Options bad;
    bad.combinator = "nope";
    CHECK_THROWS_AS(vc::resolve("qho", bad), ParseError);
}

TEST_CASE("csv rendering is deterministic and bit-identical after reload") {
    problems::Problem p = problems::make("exp-decay");
    Model m = Model::build(p.dims, p.hidden, p.final_act, 31);

    const std::string a = vc::render_csv(p, m);
    const std::string b = vc::render_csv(p, m);
    CHECK(a == b);
    CHECK(a.rfind("x_0,y_0,y_true_0,sq_error,loss_density\n", 0) == 0);

    // save -> load -> identical CSV (17-digit floats round-trip exactly)
    Model back = Model::from_json(m.to_json());
    CHECK(vc::render_csv(p, back) == a);

    // minimizer problems carry no loss density column
    problems::Problem fl = problems::make("fit-linear");
    Model mf = Model::build(fl.dims, fl.hidden, fl.final_act, 31);
    const std::string c = vc::render_csv(fl, mf);
    CHECK(c.rfind("x_0,y_0,y_true_0,sq_error\n", 0) == 0);
}

TEST_CASE("solve writes csv, meta and model; eval reproduces the csv bit-identically") {
    const fs::path out = tmp_file("varnet_cli_out.csv");
    const fs::path meta = tmp_file("varnet_cli_out.csv.meta.json");
    const fs::path model = tmp_file("varnet_cli_model.json");
    const fs::path out2 = tmp_file("varnet_cli_out2.csv");
    const std::string base = "solve fit-linear --epochs 60 --seed 5 --quiet --out " +
                             out.string() + " --save-model " + model.string();
    REQUIRE(run_cli(base) == 0);
    REQUIRE(fs::exists(out));
    REQUIRE(fs::exists(meta));
    REQUIRE(fs::exists(model));

    REQUIRE(run_cli("eval --model " + model.string() + " --problem fit-linear --out " +
                    out2.string()) == 0);
    CHECK(read_file(out.string()) == read_file(out2.string()));

    nlohmann::json doc = nlohmann::json::parse(read_file(meta.string()));
    CHECK(doc["config"]["epochs"] == 60);
    CHECK(doc["config"]["seed"] == 5);
    CHECK(doc["config"]["problem"] == "fit-linear");
    CHECK(doc["result"]["halt"] == "completed");
    CHECK(doc["result"]["breakdown"].size() == 20);

    for (const auto& f : {out, meta, model, out2}) fs::remove(f);
}

TEST_CASE("exit codes: unknown problem, bad files, terminate halt") {
    CHECK(run_cli("solve nosuch") == 1);
    CHECK(run_cli("eval --model /nonexistent.json --problem qho") == 2);
    CHECK(run_cli("solve fit-linear --config /nonexistent.json") == 2);
    CHECK(run_cli("solve fit-linear --epochs -3") == 2);
    CHECK(run_cli("solve") == 2);  // missing positional

    const fs::path garbage = tmp_file("varnet_garbage_model.json");
    {
        std::ofstream o(garbage);
        o << "{ definitely not a model";
    }
    CHECK(run_cli("eval --model " + garbage.string() + " --problem qho") == 2);
    fs::remove(garbage);

    // a huge learning rate blows the parameters up; TerminateIf(inf) halts
    // and the process reports exit code 3
    CHECK(run_cli("solve exp-decay --epochs 50 --lr 1e300 --quiet "
                  "--callback terminate-if") == 3);
}

TEST_CASE("save-model plus init-model resumes training") {
    const fs::path model = tmp_file("varnet_resume_model.json");
    const fs::path meta1 = tmp_file("varnet_resume1.csv.meta.json");
    const fs::path out1 = tmp_file("varnet_resume1.csv");
    const fs::path meta2 = tmp_file("varnet_resume2.csv.meta.json");
    const fs::path out2 = tmp_file("varnet_resume2.csv");

    REQUIRE(run_cli("solve fit-linear --epochs 150 --seed 11 --quiet --out " + out1.string() +
                    " --save-model " + model.string()) == 0);
    const double first_total = nlohmann::json::parse(read_file(meta1.string()))
                                   .at("result")
                                   .at("total_loss")
                                   .get<double>();
    REQUIRE(run_cli("solve fit-linear --epochs 150 --seed 11 --quiet --init-model " +
                    model.string() + " --out " + out2.string()) == 0);
    nlohmann::json doc2 = nlohmann::json::parse(read_file(meta2.string()));
    CHECK(doc2["config"]["init_model"] == model.string());
    // the resumed run starts where the first ended, so it must end lower
    CHECK(doc2["result"]["total_loss"].get<double>() < first_total);

    for (const auto& f : {model, meta1, out1, meta2, out2}) fs::remove(f);
}

TEST_CASE("list-problems json carries the registry defaults") {
    const fs::path out = tmp_file("varnet_list.json");
    const std::string cmd = std::string(VARNET_CLI_PATH) + " list-problems --json > " +
                            out.string() + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    nlohmann::json doc = nlohmann::json::parse(read_file(out.string()));
    REQUIRE(doc.is_array());
    bool saw_qho = false, saw_cat = false;
    for (const auto& entry : doc) {
        if (entry["name"] == "qho") {
            saw_qho = true;
            CHECK(entry["epochs"] == 60000);
        }
        if (entry["name"] == "catenary") {
            saw_cat = true;
            CHECK(entry["epochs"] == 50000);
        }
    }
    CHECK(saw_qho);
    CHECK(saw_cat);
    fs::remove(out);
}

TEST_SUITE_END();
