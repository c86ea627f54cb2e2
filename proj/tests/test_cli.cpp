#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = ASSOCLT_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args, const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path log = dir / "cli.log";
    const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("assoclt_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("--help exits 0 and documents the acceptance flags") {
    const auto dir = scratch("help");
    const auto top = run("--help", dir);
    CHECK(top.exit_code == 0);
    for (const char* sub : {"generate", "analyze", "check", "cf", "clt", "report"})
        CHECK(top.out.find(sub) != std::string::npos);

    const auto check_help = run("check --help", dir);
    CHECK(check_help.exit_code == 0);
    for (const char* flag : {"--family", "--n-grid", "--conditions", "--seed", "--threads"})
        CHECK(check_help.out.find(flag) != std::string::npos);

    const auto clt_help = run("clt --help", dir);
    CHECK(clt_help.exit_code == 0);
    for (const char* flag : {"--n", "--reps", "--seed", "--normalizer"})
        CHECK(clt_help.out.find(flag) != std::string::npos);

    const auto report_help = run("report --help", dir);
    CHECK(report_help.exit_code == 0);
    for (const char* flag : {"--theorem", "--format", "--allow-large"})
        CHECK(report_help.out.find(flag) != std::string::npos);
}

TEST_CASE("check emits condition reports") {
    const auto dir = scratch("check");
    const auto r = run("check --family iid-normal --n-grid 256,1024,4096 --conditions Ha,Hb "
                       "--seed 42 --out " + dir.string(),
                       dir);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "conditions.json"));
    REQUIRE(j.at("reports").size() == 2);
    CHECK(j.at("reports")[0].at("condition_id") == "Ha");
    CHECK(j.at("reports")[0].at("verdict").is_string());
    CHECK(j.at("provenance").at("config_hash").is_string());
}

TEST_CASE("invalid grids are a config error with a precise message") {
    const auto dir = scratch("badgrid");
    const auto r = run("check --family iid-normal --n-grid 10:5:x2 --out " + dir.string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("grid") != std::string::npos);

    const auto r2 = run("check --family iid-normal --n-grid 10,5 --out " + dir.string(), dir);
    CHECK(r2.exit_code == 2);
}

TEST_CASE("unknown flags and families are usage errors") {
    const auto dir = scratch("usage");
    CHECK(run("check --no-such-flag", dir).exit_code == 2);
    CHECK(run("clt --family klingon --out " + dir.string(), dir).exit_code == 2);
    CHECK(run("", dir).exit_code == 2);  // missing subcommand
}

TEST_CASE("clt subcommand produces a verdict file") {
    const auto dir = scratch("clt");
    const auto r = run("clt --family geo-gauss:rho=0.5 --n 512 --reps 500 --seed 7 --out " +
                           dir.string(),
                       dir);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "clt_verdict.json"));
    CHECK(j.at("pass").is_boolean());
    CHECK(j.at("n") == 512);
    CHECK(j.at("reps") == 500);
    CHECK(j.at("ks_distance").is_number());
}

TEST_CASE("same argv twice produces byte-identical outputs") {
    const auto dir1 = scratch("det1");
    const auto dir2 = scratch("det2");
    const std::string args = "clt --family geo-gauss:rho=0.5 --n 256 --reps 400 --seed 9";
    REQUIRE(run(args + " --out " + dir1.string(), dir1).exit_code == 0);
    REQUIRE(run(args + " --out " + dir2.string(), dir2).exit_code == 0);
    // The output directory is an execution detail and is not recorded, so
    // the files compare equal byte for byte.
    CHECK(slurp(dir1 / "clt_verdict.json") == slurp(dir2 / "clt_verdict.json"));
}

TEST_CASE("thread count does not perturb report bytes") {
    const auto dir1 = scratch("thr1");
    const auto dir2 = scratch("thr8");
    const std::string base = "report --theorem T1_general --family iid-normal "
                             "--n-grid 256,1024 --set reps=400 --seed 5";
    REQUIRE(run(base + " --threads 1 --out " + dir1.string(), dir1).exit_code == 0);
    REQUIRE(run(base + " --threads 8 --out " + dir2.string(), dir2).exit_code == 0);
    CHECK(slurp(dir1 / "T1_general_report.json") == slurp(dir2 / "T1_general_report.json"));
}

TEST_CASE("generate writes the documented CSV layout") {
    const auto dir = scratch("gen");
    const auto r = run("generate --family iid-rademacher --n 8 --reps 3 --seed 1 --out " +
                           dir.string(),
                       dir);
    REQUIRE(r.exit_code == 0);
    const auto text = slurp(dir / "paths.csv");
    CHECK(text.rfind("# assoclt", 0) == 0);
    CHECK(text.find("replicate,index,value") != std::string::npos);
    // 3 replicates x 8 entries + header + provenance line.
    std::size_t rows = 0;
    for (char ch : text)
        if (ch == '\n') ++rows;
    CHECK(rows == 2 + 24);

    const auto rb = run("generate --family iid-rademacher --n 8 --reps 3 --seed 1 "
                        "--format binary --out " + dir.string(),
                        dir);
    REQUIRE(rb.exit_code == 0);
    const auto bytes = slurp(dir / "paths.bin");
    CHECK(bytes.size() == 8 + 4 * 8 + 3 * 8 * sizeof(double));
    CHECK(bytes.rfind("ASCLTB01", 0) == 0);
}

TEST_CASE("analyze reports covariance structure") {
    const auto dir = scratch("analyze");
    const auto r = run("analyze --family geo-gauss:rho=0.5 --n 64 --out " + dir.string(), dir);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "covariance_report.json"));
    CHECK(j.at("source") == "analytic");
    CHECK(j.at("sigma2").get<double>() == Catch::Approx(3.0));
    CHECK(j.at("s_n2").is_number());
    CHECK(j.at("u").is_array());

    const auto r2 = run("analyze --family common-factor --n 16 --out " + dir.string(), dir);
    REQUIRE(r2.exit_code == 0);
    const auto j2 = nlohmann::json::parse(slurp(dir / "covariance_report.json"));
    CHECK(j2.at("sigma2") == "infinite");
}

TEST_CASE("cf subcommand emits the gap CSV") {
    const auto dir = scratch("cf");
    const auto r = run("cf --family geo-gauss:rho=0.5 --n 256 --set block.fixed=16 "
                       "--reps 1200 --seed 3 --out " + dir.string(),
                       dir);
    REQUIRE(r.exit_code == 0);
    const auto text = slurp(dir / "cf_block.csv");
    CHECK(text.find("t,re,im,stderr,gap,bound,holds") != std::string::npos);
    std::size_t rows = 0;
    for (char ch : text)
        if (ch == '\n') ++rows;
    CHECK(rows == 2 + 8);  // provenance + header + default t grid
}

TEST_CASE("report exits zero regardless of verdicts") {
    const auto dir = scratch("report_fail");
    // The common-factor family fails the CLT; the report is still produced.
    const auto r = run("report --theorem T1_general --family common-factor:dist=exponential "
                       "--n-grid 256,1024 --set reps=400 --seed 4 --out " + dir.string(),
                       dir);
    CHECK(r.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "T1_general_report.json"));
    CHECK(j.at("clt").at("pass") == false);
}

TEST_CASE("config file plus overrides round through the provenance block") {
    const auto dir = scratch("config");
    const fs::path cfg_path = dir / "exp.json";
    {
        std::ofstream out(cfg_path);
        out << R"({"family":{"kind":"iid","dist":{"name":"normal"},"centered":true},
                   "block_rule":{"rule":"power","alpha":0.5},
                   "n_grid":[256,512],"reps":300,"seed":11})";
    }
    const auto r = run("check --config " + cfg_path.string() +
                           " --conditions H0 --set reps=500 --out " + dir.string(),
                       dir);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "conditions.json"));
    CHECK(j.at("provenance").at("overrides")[0] == "reps=500");
}
