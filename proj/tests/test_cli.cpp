#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out, err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "wglab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = wglab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("wglab_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

nlohmann::json parse_out(const Result& r)
{
    return nlohmann::json::parse(r.out);
}

} // namespace

TEST(Cli, LocalRk)
{
    const auto r = invoke({"local", "rk", "--k", "4"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "240\n");
    const auto bad = invoke({"local", "rk", "--k", "0"});
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("k"), std::string::npos);
}

TEST(Cli, WaringPair)
{
    const auto r = invoke({"waring-pair", "--q", "16", "--k", "2", "--s", "16", "--strategy", "exhaustive"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(parse_out(r)["verdict"], "pair");
    const auto np = invoke({"waring-pair", "--q", "5", "--k", "2", "--s", "2", "--strategy", "exhaustive"});
    ASSERT_EQ(np.code, 0) << np.err;
    EXPECT_EQ(parse_out(np)["verdict"], "not-pair");
}

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"bogus"}).code, 2);
    EXPECT_EQ(invoke({"local"}).code, 2);
    EXPECT_EQ(invoke({"majorant", "--w", "1"}).code, 2);
    EXPECT_EQ(invoke({"majorant", "--b", "3"}).code, 2);
    EXPECT_EQ(invoke({"coverage", "--subset", "bogus"}).code, 2);
    EXPECT_EQ(invoke({"count", "--method", "abacus"}).code, 2);
    EXPECT_EQ(invoke({"restrict", "--exponent", "2"}).code, 2);
    EXPECT_EQ(invoke({"local", "rk", "--k", "notanumber"}).code, 2);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, DryRunComputesNothing)
{
    const auto dir = scratch("dry");
    const auto r = invoke({"coverage", "--k", "2", "--s", "44", "--lo", "100000", "--hi", "110000", "--out", dir.string(), "--dry-run"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = parse_out(r);
    EXPECT_EQ(j["command"], "coverage");
    EXPECT_TRUE(j["dry_run"].get<bool>());
    EXPECT_TRUE(j.contains("plan"));
    EXPECT_FALSE(fs::exists(dir));
    EXPECT_EQ(invoke({"coverage", "--s", "0", "--dry-run"}).code, 2);
}

TEST(Cli, ConfigFileWithOverride)
{
    const auto dir = scratch("config");
    fs::create_directories(dir);
    const auto cfg = dir / "run.cfg";
    std::ofstream(cfg) << "k=2\ns=5\nlo=5000\nhi=20000\nsubset=all\n";
    const auto r = invoke({"coverage", "--config", cfg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = parse_out(r);
    EXPECT_EQ(j["report"]["admissible"], 625);
    EXPECT_EQ(j["report"]["exception_count"], 0);
    const auto o = invoke({"coverage", "--config", cfg.string(), "--hi", "6000"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(parse_out(o)["report"]["window"][1], 6000);
    std::ofstream(dir / "bad.cfg") << "k=0\n";
    EXPECT_EQ(invoke({"local", "rk", "--config", (dir / "bad.cfg").string()}).code, 2);
}

TEST(Cli, DeterministicReports)
{
    const std::vector<std::vector<std::string>> runs = {
        {"local", "sigma", "--w", "2", "--k", "2"},
        {"local", "lifts", "--p", "3", "--k", "2"},
        {"local", "decompose", "--w", "2", "--k", "2", "--s", "16", "--f", "0.6"},
        {"local", "thresholds", "--k", "3"},
        {"waring-pair", "--q", "81", "--k", "2", "--s", "16", "--strategy", "sampled", "--trials", "200", "--seed", "9"},
        {"majorant", "--w", "2", "--k", "2", "--N", "4096", "--b", "all", "--subset", "bernoulli:0.8", "--seed", "5"},
        {"spectrum", "--w", "2", "--k", "2", "--N", "1024", "--b", "1", "--sigma", "1.5", "--sigma0", "1"},
        {"arcs", "--w", "2", "--k", "2", "--N", "4096", "--b", "1", "--sigma", "1.5", "--sigma0", "1", "--alpha", "0.5,0.3333"},
        {"restrict", "--w", "2", "--k", "2", "--N", "1024,2048", "--b", "1", "--control", "spike"},
        {"count", "--k", "2", "--s", "2", "--lo", "0", "--hi", "100", "--method", "brute"},
        {"coverage", "--k", "2", "--s", "3", "--lo", "100", "--hi", "5000", "--subset", "bernoulli:0.7", "--seed", "3"},
        {"transfer", "--w", "2", "--k", "2", "--s", "8", "--N", "1024", "--n", "8"},
        {"report", "--w", "2", "--k", "2", "--N", "1024"},
    };
    for (const auto& args : runs) {
        const auto a = invoke(args), b = invoke(args);
        EXPECT_EQ(a.code, 0) << args[0] << ": " << a.err;
        EXPECT_EQ(a.out, b.out) << args[0];
        EXPECT_TRUE(nlohmann::json::accept(a.out) || args[1] == "rk") << args[0];
    }
}

TEST(Cli, SeedChangesSampledSubsets)
{
    const std::vector<std::string> base = {"coverage", "--k", "2", "--s", "2", "--lo", "100", "--hi", "20000", "--no-filter", "--subset", "bernoulli:0.5"};
    auto a = base, b = base;
    a.insert(a.end(), {"--seed", "1"});
    b.insert(b.end(), {"--seed", "2"});
    EXPECT_NE(invoke(a).out, invoke(b).out);
}

TEST(Cli, WritesReportFiles)
{
    const auto dir = scratch("files");
    const auto r = invoke({"coverage", "--k", "2", "--s", "2", "--lo", "10", "--hi", "100", "--no-filter", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "coverage.json"), r.out);
    const auto csv = slurp(dir / "coverage.csv");
    EXPECT_EQ(csv.rfind("n,admissible,represented\n", 0), 0u);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    const auto ex = slurp(dir / "exceptions.txt");
    EXPECT_EQ(ex.rfind("10\n11\n12\n", 0), 0u);

    const auto mdir = scratch("dump");
    const auto m = invoke({"majorant", "--w", "2", "--k", "2", "--N", "512", "--b", "1", "--dump", "--out", mdir.string()});
    ASSERT_EQ(m.code, 0) << m.err;
    EXPECT_TRUE(fs::exists(mdir / "majorant.json"));
    bool bin = false, csvs = false;
    for (const auto& e : fs::directory_iterator(mdir)) {
        bin = bin || e.path().extension() == ".bin";
        csvs = csvs || e.path().extension() == ".csv";
    }
    EXPECT_TRUE(bin);
    EXPECT_TRUE(csvs);
}

TEST(Cli, MajorantChecksPass)
{
    const auto r = invoke({"majorant", "--w", "2", "--k", "2", "--N", "4096", "--b", "all"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = parse_out(r);
    EXPECT_TRUE(j.dump().find("\"balanced\":true") != std::string::npos);
}

TEST(Cli, CountAgreesWithLibrary)
{
    const auto r = invoke({"count", "--k", "2", "--s", "2", "--lo", "7", "--hi", "13", "--method", "fft"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto counts = parse_out(r)["counts"];
    ASSERT_EQ(counts.size(), 7u);
    EXPECT_EQ(counts[1], nlohmann::json::array({8, 1}));
    EXPECT_EQ(counts[6], nlohmann::json::array({13, 2}));
}
