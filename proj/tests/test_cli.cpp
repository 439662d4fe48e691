#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sdos/cli.hpp"

using namespace sdos;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("parse_args: full flag set") {
    const cli::RunConfig c = cli::parse_args({"--model", "gaussian_toy", "--method", "vi", "--iters", "100,1000",
                                              "--M", "1,4", "--K", "250", "--seed", "17", "--level", "0.9", "--out",
                                              "/tmp/x.json", "--format", "csv", "--jobs", "3"});
    REQUIRE(c.model == "gaussian_toy");
    REQUIRE(c.method == "vi");
    REQUIRE(c.iters == std::vector<int>{100, 1000});
    REQUIRE(c.Ms == std::vector<int>{1, 4});
    REQUIRE(c.K == 250);
    REQUIRE(c.seed == 17);
    REQUIRE(c.level == 0.9);
    REQUIRE(c.out == "/tmp/x.json");
    REQUIRE(c.format == "csv");
    REQUIRE(c.jobs == 3);
    REQUIRE(c.standardize);
}

TEST_CASE("parse_args: defaults") {
    const cli::RunConfig c = cli::parse_args({"--model", "glm_binomial", "--method", "iwvi"});
    REQUIRE(c.iters == std::vector<int>{1000});
    REQUIRE(c.Ms == std::vector<int>{1});
    REQUIRE(c.K == 100);
    REQUIRE(c.seed == 0);
    REQUIRE(c.level == 0.95);
    REQUIRE(c.format == "json");
    REQUIRE(c.jobs == 1);
}

TEST_CASE("parse_args: rejections name the offending flag") {
    auto expect_usage = [](const std::vector<std::string>& args, const std::string& needle) {
        try {
            cli::parse_args(args);
            FAIL("expected UsageError");
        } catch (const cli::UsageError& e) {
            REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_usage({"--model", "gaussian_toy", "--method", "vi", "--K", "1"}, "--K");
    expect_usage({"--model", "nope", "--method", "vi"}, "gaussian_toy");
    expect_usage({"--model", "gaussian_toy", "--method", "nope"}, "laplace");
    expect_usage({"--model", "gaussian_toy", "--method", "vi", "--level", "1.5"}, "--level");
    expect_usage({"--model", "gaussian_toy", "--method", "vi", "--jobs", "0"}, "--jobs");
    expect_usage({"--model", "gaussian_toy", "--method", "vi", "--format", "xml"}, "--format");
    expect_usage({"--model", "gaussian_toy", "--method", "vi", "--iters", "0"}, "--iters");
    expect_usage({"--model", "concrete", "--method", "vi"}, "--data");
    expect_usage({"--model", "glm_binomial", "--method", "exact"}, "conjugate");
    expect_usage({"--method", "vi"}, "--model");
}

TEST_CASE("make_model covers every id") {
    for (const auto& name : cli::valid_models()) {
        cli::RunConfig c;
        c.model = name;
        if (name == "ionosphere") c.data_path = std::string(SDOS_DATA_DIR) + "/ionosphere_sample.csv";
        if (name == "concrete") c.data_path = std::string(SDOS_DATA_DIR) + "/concrete_sample.csv";
        const Model m = cli::make_model(c);
        REQUIRE(m.name == name);
        REQUIRE(m.dim >= 1);
    }
}

TEST_CASE("run_sweep: exact inference on the toy model writes a clean json report") {
    const std::string path = "/tmp/sdos_cli_exact.json";
    cli::RunConfig c = cli::parse_args({"--model", "gaussian_toy", "--method", "exact", "--K", "50", "--seed", "5",
                                        "--out", path});
    REQUIRE(cli::run_sweep(c) == 0);

    const nlohmann::json j = nlohmann::json::parse(slurp(path));
    REQUIRE(j["model"] == "gaussian_toy");
    REQUIRE(j["method"] == "exact");
    REQUIRE(j["cells"].size() == 1);
    const auto& cell = j["cells"][0];
    REQUIRE(cell["iters"] == 1000);
    REQUIRE(cell["M"] == 1);
    REQUIRE(cell["K"] == 50);
    REQUIRE(cell["seed"] == 5);
    REQUIRE(cell["failure_count"] == 0);
    REQUIRE(cell["d_values"].size() == 50);
    REQUIRE(std::abs(cell["mean"].get<double>()) <= 1e-8);
    REQUIRE(std::abs(cell["ci"][0].get<double>()) <= 1e-8);
    REQUIRE(std::abs(cell["ci"][1].get<double>()) <= 1e-8);
    std::remove(path.c_str());
}

TEST_CASE("run_sweep: identical configs give byte-identical output") {
    const std::string p1 = "/tmp/sdos_cli_rep1.json", p2 = "/tmp/sdos_cli_rep2.json";
    std::vector<std::string> args = {"--model", "gaussian_toy", "--method", "vi", "--iters", "50", "--K", "20",
                                     "--seed", "9", "--out", p1};
    REQUIRE(cli::run_sweep(cli::parse_args(args)) == 0);
    args.back() = p2;
    REQUIRE(cli::run_sweep(cli::parse_args(args)) == 0);
    REQUIRE(slurp(p1) == slurp(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("run_sweep: csv output carries the header and one row per cell") {
    const std::string path = "/tmp/sdos_cli_exact.csv";
    cli::RunConfig c = cli::parse_args({"--model", "gaussian_toy", "--method", "exact", "--K", "30", "--iters",
                                        "10,20", "--out", path, "--format", "csv"});
    REQUIRE(cli::run_sweep(c) == 0);
    const std::string text = slurp(path);
    REQUIRE(text.rfind("model,method,iters,M,K,seed,mean,std_error,ci_lo,ci_hi,failure_count\n", 0) == 0);
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 3);
    REQUIRE(text.find("gaussian_toy,exact,10,") != std::string::npos);
    REQUIRE(text.find("gaussian_toy,exact,20,") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("plot_data: sorted by the swept axis with ci pass-through") {
    cli::RunConfig c;
    c.model = "gaussian_toy";
    c.method = "vi";
    c.iters = {10000, 100, 1000};
    auto make_cell = [](int iters, double mean) {
        cli::SweepCell cell;
        cell.iters = iters;
        DiagnosticResult r;
        r.mean = mean;
        r.ci = {mean - 0.5, mean + 0.5};
        cell.result = std::move(r);
        return cell;
    };
    const std::vector<cli::SweepCell> cells = {make_cell(10000, 0.1), make_cell(100, 2.0), make_cell(1000, 0.6)};
    const nlohmann::json pts = cli::plot_data(c, cells);
    REQUIRE(pts.size() == 3);
    REQUIRE(pts[0]["x"] == 100);
    REQUIRE(pts[1]["x"] == 1000);
    REQUIRE(pts[2]["x"] == 10000);
    REQUIRE(pts[0]["y"] == 2.0);
    REQUIRE(pts[0]["y_lo"] == 1.5);
    REQUIRE(pts[0]["y_hi"] == 2.5);
    REQUIRE(pts[0]["series"].get<std::string>().find("vi") != std::string::npos);

    REQUIRE_THROWS(cli::plot_data(c, {}));
    cli::SweepCell failed;
    failed.iters = 100;
    REQUIRE_THROWS(cli::plot_data(c, {failed}));
}

TEST_CASE("run_sweep: every-cell failure returns nonzero and records the failures") {
    // heart_transplants with exact method is rejected at parse time, so force a
    // failing configuration through run_sweep by hand: a 1-iteration laplace
    // fit cannot fail, so instead check the json path for an empty cell.
    cli::RunConfig c;
    c.model = "gaussian_toy";
    c.method = "exact";
    c.K = 10;
    const std::vector<cli::SweepCell> cells = {cli::SweepCell{500, 1, std::nullopt}};
    const nlohmann::json j = cli::sweep_to_json(c, cells);
    REQUIRE(j["cells"][0]["mean"].is_null());
    REQUIRE(j["cells"][0]["failure_count"] == 10);
    REQUIRE(j["cells"][0]["d_values"].empty());
    const std::string csv = cli::sweep_to_csv(c, cells);
    REQUIRE(csv.find(",,,,10\n") != std::string::npos);
}
