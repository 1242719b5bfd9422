#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kCli = VCLF_CLI_PATH;
const fs::path kConfigs = VCLF_CONFIG_DIR;

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout only
};

RunResult run(const std::string& args) {
    const auto out_file = fs::temp_directory_path() /
                          ("vclf_cli_out_" + std::to_string(::getpid()) + ".txt");
    const std::string cmd = kCli + " " + args + " > " + out_file.string() + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out_file);
    res.output.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    fs::remove(out_file);
    return res;
}

}  // namespace

TEST_CASE("smallgain on the worked matrix") {
    auto res = run("smallgain " + (kConfigs / "example43_gains.json").string());
    CHECK(res.exit_code == 0);
    const auto rep = json::parse(res.output);
    CHECK(rep.at("verdict") == "satisfied");
    CHECK(rep.at("cycles").size() == 3);
    CHECK(rep.contains("manifest"));
    CHECK(rep.at("manifest").at("config_hash").get<std::string>().rfind("fnv1a:", 0) == 0);
}

TEST_CASE("smallgain rejects an expanding matrix") {
    const auto tmp = fs::temp_directory_path() / "vclf_bad_gains.json";
    std::ofstream(tmp) << R"({"k":2,"entries":[
        [{"kind":"zero"},{"kind":"linear","slope":1.5}],
        [{"kind":"linear","slope":1.5},{"kind":"zero"}]]})";
    auto res = run("smallgain " + tmp.string());
    CHECK(res.exit_code == 2);
    CHECK(json::parse(res.output).at("verdict") == "violated");
    fs::remove(tmp);
}

TEST_CASE("feascheck on the symmetric pair") {
    auto res = run("feascheck " + (kConfigs / "feasibility_demo.json").string());
    CHECK(res.exit_code == 0);
    const auto rep = json::parse(res.output);
    CHECK(rep.at("feasible") == true);
    CHECK(rep.at("interval").at("lower").get<double>() == doctest::Approx(-2.0));
    CHECK(rep.at("interval").at("upper").get<double>() == doctest::Approx(2.0));
    CHECK(rep.at("selected_u").get<double>() == 0.0);
}

TEST_CASE("verify on the scalar demo problem") {
    auto res = run("verify " + (kConfigs / "scalar_problem.json").string() +
                   " --samples 20000");
    CHECK(res.exit_code == 0);
    const auto rep = json::parse(res.output);
    CHECK(rep.at("passed") == true);
}

TEST_CASE("synth batch evaluation") {
    const auto pts = fs::temp_directory_path() / "vclf_points.csv";
    std::ofstream(pts) << "x1\n0.05\n0.5\n1.2\n";
    auto res = run("synth " + (kConfigs / "scalar_problem.json").string() + " --points " +
                   pts.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.rfind("x1,u,region", 0) == 0);
    CHECK(res.output.find("local_core") != std::string::npos);
    CHECK(res.output.find("escape") != std::string::npos);
    fs::remove(pts);
}

TEST_CASE("simulate with monitors") {
    auto res = run("simulate " + (kConfigs / "scalar_problem.json").string() +
                   " --x0 0.9 --T 12");
    CHECK(res.exit_code == 0);
    const auto rep = json::parse(res.output);
    CHECK(rep.at("monitor").at("violations") == 0);
    CHECK(std::abs(rep.at("final_state")[0].get<double>()) < 1e-3);
}

TEST_CASE("cstr pipeline on the shipped network") {
    const auto net = (kConfigs / "cstr_two_species.json").string();

    SUBCASE("equilibria") {
        auto res = run("cstr equilibria " + net + " --dstar 1");
        CHECK(res.exit_code == 0);
        const auto rep = json::parse(res.output);
        CHECK(rep.at("method") == "bisection");
        CHECK(rep.at("roots").size() == 1);
    }
    SUBCASE("check") {
        auto res = run("cstr check " + net + " --samples 20000");
        CHECK(res.exit_code == 0);
        const auto rep = json::parse(res.output);
        CHECK(rep.at("hypotheses").at("passed") == true);
        CHECK(rep.at("conditions").at("passed") == true);
    }
    SUBCASE("stabilize evaluates the dilution rate") {
        auto res = run("cstr stabilize " + net);
        CHECK(res.exit_code == 0);
        // the first probe row is the equilibrium itself: D = 1
        std::istringstream is(res.output);
        std::string header, first;
        std::getline(is, header);
        std::getline(is, first);
        CHECK(header == "c1,c2,D");
        CHECK(first == "1,1,1");
    }
    SUBCASE("simulate single run") {
        auto res = run("cstr simulate " + net + " --c0 3.0,0.2 --T 120");
        CHECK(res.exit_code == 0);
        const auto rep = json::parse(res.output);
        CHECK(rep.at("converged") == 1);
        CHECK(rep.at("runs")[0].at("monitor_violations") == 0);
    }
}

TEST_CASE("three-root instance prints all roots") {
    const auto tmp = fs::temp_directory_path() / "vclf_raw_net.json";
    std::ofstream(tmp) << R"({
        "S": [[-1.0],[1.0]],
        "rates": [["*", 1.0, "c1", ["pow", "c2", 2]]],
        "c_f": [3.95, 0.05],
        "D_max": 10.0
    })";
    auto res = run("cstr equilibria " + tmp.string() + " --dstar 1");
    CHECK(res.exit_code == 0);
    const auto rep = json::parse(res.output);
    CHECK(rep.at("roots").size() == 3);
    for (const auto& r : rep.at("roots"))
        CHECK(r.at("residual").get<double>() <= 1e-10);
    fs::remove(tmp);
}

TEST_CASE("usage and IO failures exit with one") {
    CHECK(run("smallgain /nonexistent/file.json").exit_code == 1);
    const auto tmp = fs::temp_directory_path() / "vclf_broken.json";
    std::ofstream(tmp) << "{\"k\": 2,\n  \"entries\": [[}";
    CHECK(run("smallgain " + tmp.string()).exit_code == 1);
    CHECK(run("frobnicate").exit_code != 0);
    fs::remove(tmp);
}

TEST_CASE("report JSON round-trips against the schema shape") {
    auto res = run("example44 --samples 5000");
    CHECK(res.exit_code == 0);
    const auto rep = json::parse(res.output);
    CHECK(rep.contains("conditions"));
    CHECK(rep.at("conditions").contains("passed"));
    for (const auto& s : rep.at("conditions").at("conditions")) {
        CHECK(s.contains("name"));
        CHECK(s.contains("antecedent_hits"));
        CHECK(s.contains("violations"));
    }
}

TEST_CASE("feedback evaluation service") {
    const int port = 18000 + static_cast<int>(::getpid() % 2000);
    const std::string cmd = kCli + " synth " +
                            (kConfigs / "scalar_problem.json").string() + " --serve " +
                            std::to_string(port) + " >/dev/null 2>&1 & echo $!";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    long pid = 0;
    REQUIRE(std::fscanf(pipe, "%ld", &pid) == 1);
    ::pclose(pipe);

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(1, 0);
    bool up = false;
    for (int attempt = 0; attempt < 50 && !up; ++attempt) {
        if (auto health = client.Get("/health"); health && health->status == 200) up = true;
        else std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    if (up) {
        auto res = client.Post("/eval", R"({"x": [0.5]})", "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        const auto body = json::parse(res->body);
        CHECK(body.contains("u"));
        CHECK(body.at("region") == "decrease");
        auto bad = client.Post("/eval", R"({"x": "nope"})", "application/json");
        REQUIRE(bad);
        CHECK(bad->status == 400);
    }
    ::kill(static_cast<pid_t>(pid), SIGTERM);
    WARN_MESSAGE(up, "evaluation service never came up; checks skipped");
}
