#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
    int exit_code;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "shapmc-cli-test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliRun run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = work_dir() / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = work_dir() / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string(SHAPMC_CLI_PATH) + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

// A 3-feature fixture: model JSON + 8-row CSV.
struct Fixture {
    fs::path model = work_dir() / "model.json";
    fs::path data = work_dir() / "data.csv";

    Fixture() {
        write_file(model, R"({"n": 3, "kind": "expression",
                             "expression": "x1*x2 + sin(x3) + 0.5*x1"})");
        write_file(data,
                   "x1,x2,x3\n"
                   "0.1,0.9,-0.4\n"
                   "1.2,-0.3,0.8\n"
                   "-0.7,0.5,1.1\n"
                   "0.4,0.4,0.4\n"
                   "-1.1,-0.9,0.2\n"
                   "0.9,1.3,-1.0\n"
                   "0.3,-0.6,0.6\n"
                   "-0.2,0.8,-0.8\n");
    }
};

}  // namespace

TEST_CASE("cli explain --exact satisfies efficiency") {
    Fixture fx;
    CliRun r = run_cli("explain shapley --exact --model " + fx.model.string() + " --data " +
                       fx.data.string() + " --row 0");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    REQUIRE(j["results"].size() == 1);
    const auto& values = j["results"][0]["values"];
    REQUIRE(values.size() == 3);
    // sum must equal v(N) - v(0); recompute from the fixture.
    // f(x*) with x* = row 0: 0.1*0.9 + sin(-0.4) + 0.05
    const double fx_star = 0.1 * 0.9 + std::sin(-0.4) + 0.5 * 0.1;
    double mean_f = 0.0;
    const double rows[8][3] = {{0.1, 0.9, -0.4}, {1.2, -0.3, 0.8}, {-0.7, 0.5, 1.1},
                               {0.4, 0.4, 0.4},  {-1.1, -0.9, 0.2}, {0.9, 1.3, -1.0},
                               {0.3, -0.6, 0.6}, {-0.2, 0.8, -0.8}};
    for (const auto& row : rows)
        mean_f += row[0] * row[1] + std::sin(row[2]) + 0.5 * row[0];
    mean_f /= 8.0;
    CHECK(j["results"][0]["sum"].get<double>() ==
          doctest::Approx(fx_star - mean_f).epsilon(1e-9));
}

TEST_CASE("cli determinism: identical seeds give identical bytes") {
    Fixture fx;
    const std::string args = "explain owen --model " + fx.model.string() + " --data " +
                             fx.data.string() +
                             " --row 1 --partition [[1,2],[3]]"
                             " --mode empirical --iterations 1024 --seed 7";
    CliRun a = run_cli(args);
    CliRun b = run_cli(args);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(!a.out.empty());
}

TEST_CASE("cli two-step with singletons equals quotient") {
    Fixture fx;
    const std::string tail = " --model " + fx.model.string() + " --data " + fx.data.string() +
                             " --row 2 --partition [[1],[2],[3]] --iterations 512 --seed 3";
    CliRun ts = run_cli("explain two-step" + tail);
    CliRun q = run_cli("explain quotient" + tail);
    REQUIRE(ts.exit_code == 0);
    REQUIRE(q.exit_code == 0);
    json jt = json::parse(ts.out);
    json jq = json::parse(q.out);
    CHECK(jt["results"][0]["values"] == jq["results"][0]["values"]);
}

TEST_CASE("cli exact refuses n = 21 with a costed message") {
    std::ostringstream header, row;
    for (int i = 1; i <= 21; ++i) {
        header << (i > 1 ? "," : "") << "x" << i;
        row << (i > 1 ? "," : "") << "0.5";
    }
    const fs::path model = work_dir() / "wide-model.json";
    const fs::path data = work_dir() / "wide.csv";
    write_file(model, R"({"n": 21, "kind": "expression", "expression": "x1 + x21"})");
    write_file(data, header.str() + "\n" + row.str() + "\n");

    CliRun r = run_cli("exact shapley --model " + model.string() + " --data " + data.string() +
                       " --row 0");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("2^21") != std::string::npos);
}

TEST_CASE("cli exact on a constant model yields zeros") {
    Fixture fx;
    const fs::path model = work_dir() / "const-model.json";
    write_file(model, R"({"n": 3, "kind": "expression", "expression": "4.25"})");
    CliRun r = run_cli("exact shapley --model " + model.string() + " --data " +
                       fx.data.string() + " --row 0");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    for (const auto& v : j["results"][0]["values"]) CHECK(v.get<double>() == 0.0);
}

TEST_CASE("cli flag validation fails before computation") {
    Fixture fx;
    CliRun no_model = run_cli("explain shapley --data " + fx.data.string() + " --row 0");
    CHECK(no_model.exit_code == 1);

    CliRun two_sources = run_cli("explain shapley --model " + fx.model.string() + " --data " +
                                 fx.data.string() + " --row 0 --x 1,2,3");
    CHECK(two_sources.exit_code == 1);

    CliRun no_partition = run_cli("explain owen --model " + fx.model.string() + " --data " +
                                  fx.data.string() + " --row 0");
    CHECK(no_partition.exit_code == 1);

    CliRun bad_mode = run_cli("explain shapley --model " + fx.model.string() + " --data " +
                              fx.data.string() + " --row 0 --mode sideways");
    CHECK(bad_mode.exit_code == 1);

    CliRun bad_partition = run_cli("explain owen --model " + fx.model.string() + " --data " +
                                   fx.data.string() + " --row 0 --partition [[1,2],[9]]");
    CHECK(bad_partition.exit_code == 1);
}

TEST_CASE("cli csv format and --all-rows") {
    Fixture fx;
    CliRun r = run_cli("explain shapley --model " + fx.model.string() + " --data " +
                       fx.data.string() + " --all-rows --iterations 64 --seed 1 --format csv");
    REQUIRE(r.exit_code == 0);
    std::istringstream out(r.out);
    std::string line;
    std::getline(out, line);
    CHECK(line == "row,index,name,value,stderr");
    int rows = 0;
    while (std::getline(out, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 8 * 3);
}

TEST_CASE("cli inline observation") {
    Fixture fx;
    CliRun r = run_cli("explain shapley --model " + fx.model.string() + " --data " +
                       fx.data.string() + " --x 0.5,-0.5,1.0 --iterations 128 --seed 2");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["results"][0]["values"].size() == 3);
    CHECK(j["results"][0]["stderr"].size() == 3);

    CliRun bad = run_cli("explain shapley --model " + fx.model.string() + " --data " +
                         fx.data.string() + " --x 0.5,oops,1.0");
    CHECK(bad.exit_code == 1);
}

TEST_CASE("cli experiment row-count contract") {
    const fs::path dir = work_dir() / "exp";
    fs::create_directories(dir);
    CliRun r = run_cli("experiment 1a --runs 2 --kmin 9 --kmax 10 --size 20 --seed 6 --out-dir " +
                       dir.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("slope") != std::string::npos);

    std::ifstream csv(dir / "convergence.csv");
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2 * 2);  // runs x K values

    std::ifstream js(dir / "summary.json");
    REQUIRE(js.good());
    json j = json::parse(js);
    CHECK(j["experiment"] == "1a");
    CHECK(j["per_k"].size() == 2);

    CliRun bad = run_cli("experiment 9z");
    CHECK(bad.exit_code == 1);
}

TEST_CASE("cli validate") {
    Fixture fx;
    CliRun r = run_cli("validate --model " + fx.model.string() + " --data " + fx.data.string() +
                       " --partition [[1,2],[3]]");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("ok") != std::string::npos);
}
