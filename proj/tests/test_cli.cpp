// test_cli.cpp: End-to-end runs of the wqed binary (path from $WQED_CLI)

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <sys/wait.h>
#include <unistd.h>

#include "wqed/wqed.hpp"

using namespace wqed;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    std::string exe;

    void SetUp() override
    {
        const char* env = std::getenv("WQED_CLI");
        if (!env) GTEST_SKIP() << "WQED_CLI not set";
        exe = env;
        dir = fs::temp_directory_path() /
              ("wqed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
               std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    void TearDown() override
    {
        if (!dir.empty()) fs::remove_all(dir);
    }

    Outcome run(const std::string& args, const std::string& env = "") const
    {
        const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
        const std::string cmd = env + " '" + exe + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read(out), read(err)};
    }

    static std::string read(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }

    std::string write(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir / name, std::ios::binary) << text;
        return (dir / name).string();
    }

    std::string config(json edit = json::object()) const
    {
        json doc = {
            {"waveguide", {{"Z0_ohm", 50}, {"v_m_per_s", 0.8948e8}}},
            {"atoms",
             {{{"label", "Q1"}, {"EC_GHz", 0.324}, {"max_frequency_GHz", 9.0}, {"beta", 0.81}, {"x_mm", 33},
               {"gamma_phi_MHz", 2.15}, {"frequency_GHz", 4.75}},
              {{"label", "Q2"}, {"EC_GHz", 0.406}, {"max_frequency_GHz", 9.0}, {"beta", 0.766}, {"x_mm", 0},
               {"gamma_phi_MHz", 2.785}, {"frequency_GHz", 4.75}}}},
            {"probe", {{"frequency_GHz", {{"start", 4.70}, {"stop", 4.80}, {"step", 0.002}}}, {"power_dBm", -200}}},
            {"sweep", {{"atom", 0}, {"frequency_GHz", {{"start", 4.73}, {"stop", 4.77}, {"step", 0.01}}}}},
            {"output", {{"directory", (dir / "out").string()}, {"prefix", "t"}}}};
        doc.merge_patch(edit);
        return write("config.json", doc.dump(2));
    }
};

} // namespace

TEST_F(Cli, UsageErrors)
{
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("spectrum").code, 1);
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("fit x.tsv --mode sideways").code, 1);
}

TEST_F(Cli, CalibrateVelocity)
{
    const Outcome ok = run("calibrate-velocity --node 4.745:7 --node 6.094:9 --node 7.414:11 --length-mm 33");
    ASSERT_EQ(ok.code, 0) << ok.err;
    const json j = json::parse(ok.out);
    EXPECT_NEAR(j["v_m_per_s"].get<double>(), 0.8948e8, 0.01 * 0.8948e8);
    EXPECT_LT(j["max_relative_spread"].get<double>(), 0.01);

    EXPECT_EQ(run("calibrate-velocity --node 4.745:8 --length-mm 33").code, 1);
    EXPECT_EQ(run("calibrate-velocity --node 4.745 --length-mm 33").code, 1);
    EXPECT_EQ(run("calibrate-velocity --node 4.745:7x --length-mm 33").code, 1);
    const Outcome spread = run("calibrate-velocity --node 4.745:7 --node 6.5:9 --length-mm 33");
    EXPECT_EQ(spread.code, 2);
    EXPECT_NE(spread.err.find("spread"), std::string::npos);
}

TEST_F(Cli, SpectrumWritesTablesAndManifest)
{
    const Outcome r = run("spectrum " + config({{"sweep", nullptr}}) + " --workers 2");
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(r.out);
    EXPECT_EQ(summary["solves"], 51);
    EXPECT_TRUE(fs::exists(dir / "out" / "t_spectrum.tsv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "t_dips.tsv"));
    const json manifest = load_json((dir / "out" / "t_manifest.json").string());
    EXPECT_EQ(manifest["kind"], "spectrum");
    EXPECT_EQ(manifest["config_hash"], summary["config_hash"]);

    // re-run from the manifest into a second directory: identical tables
    const Outcome again = run("spectrum " + (dir / "out" / "t_manifest.json").string() + " --out-dir " +
                          (dir / "again").string() + " --workers 1");
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(read(dir / "out" / "t_spectrum.tsv"), read(dir / "again" / "t_spectrum.tsv"));
    EXPECT_EQ(read(dir / "out" / "t_dips.tsv"), read(dir / "again" / "t_dips.tsv"));
}

TEST_F(Cli, Sweep2dThenSplitting)
{
    const Outcome r = run("sweep2d " + config() + " --prefix map");
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(r.out);
    ASSERT_TRUE(summary.contains("splitting_MHz"));
    const Outcome s = run("splitting " + (dir / "out" / "map_map.tsv").string());
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_DOUBLE_EQ(json::parse(s.out)["splitting_MHz"].get<double>(), summary["splitting_MHz"].get<double>());
}

TEST_F(Cli, PowerSweep)
{
    const json edit = {{"sweep", nullptr},
                       {"probe", {{"power_dBm", nullptr}}},
                       {"power", {{"reference_dBm", -190}, {"dB", {{"start", 0}, {"stop", 80}, {"step", 20}}}}}};
    const Outcome r = run("power-sweep " + config(edit));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "out" / "t_splitting.tsv"));
    EXPECT_TRUE(json::parse(r.out).contains("saturation_knee_dB"));
}

TEST_F(Cli, FitRecoversSyntheticLine)
{
    std::string trace = "freq_GHz\tre_r\tim_r\n";
    std::string mag = "freq_GHz\tabs_r\n";
    for (int i = -200; i <= 200; ++i) {
        const double f = 4.692 + i * 2.5e-4;
        const cplx r = single_atom_model(f, 4.692, 21.0, 2.15);
        trace += std::to_string(f) + "\t" + std::to_string(r.real()) + "\t" + std::to_string(r.imag()) + "\n";
        mag += std::to_string(f) + "\t" + std::to_string(std::abs(r)) + "\n";
    }
    const Outcome c = run("fit " + write("trace.tsv", trace));
    ASSERT_EQ(c.code, 0) << c.err;
    const json j = json::parse(c.out);
    EXPECT_TRUE(j["used_phase"].get<bool>());
    EXPECT_NEAR(j["Gamma_MHz"].get<double>(), 21.0, 0.05 * 21.0);
    EXPECT_NEAR(j["gamma_phi_MHz"].get<double>(), 2.15, 0.05 * 2.15);

    const Outcome m = run("fit " + write("mag.tsv", mag) + " --branch over");
    ASSERT_EQ(m.code, 0) << m.err;
    const json k = json::parse(m.out);
    EXPECT_FALSE(k["used_phase"].get<bool>());
    EXPECT_NEAR(k["Gamma_MHz"].get<double>(), 21.0, 0.05 * 21.0);
    EXPECT_TRUE(k.contains("alternate"));

    EXPECT_EQ(run("fit " + write("mag2.tsv", mag) + " --mode complex").code, 1);
}

TEST_F(Cli, ExitCodesByCategory)
{
    // config errors
    EXPECT_EQ(run("spectrum " + config({{"colour", "red"}})).code, 1);
    EXPECT_EQ(run("spectrum " + write("bad.json", "{ nope")).code, 1);
    EXPECT_EQ(run("spectrum " + config(), "WQED_WORKERS=zero").code, 1);
    // solver error, annotated with the grid point
    const Outcome s = run("spectrum " + config({{"solver", {{"singular_threshold", 0.9}}}}));
    EXPECT_EQ(s.code, 2);
    EXPECT_NE(s.err.find("grid point"), std::string::npos) << s.err;
    // I/O errors
    EXPECT_EQ(run("spectrum " + (dir / "missing.json").string()).code, 3);
    write("blocker", "x");
    EXPECT_EQ(run("spectrum " + config() + " --out-dir " + (dir / "blocker" / "sub").string()).code, 3);
    EXPECT_EQ(run("fit " + (dir / "missing.tsv").string()).code, 3);
}

TEST_F(Cli, WarningsGoToStderr)
{
    const json edit = {{"sweep", nullptr},
                       {"atoms", {{{"label", "A"}, {"EC_GHz", 0.4}, {"max_frequency_GHz", 9.0}, {"beta", 0.5},
                                   {"x_mm", 0}, {"gamma_phi_MHz", 2.0}, {"frequency_GHz", 2.0}}}},
                       {"probe", {{"frequency_GHz", {{"start", 4.0}, {"stop", 4.2}, {"step", 0.05}}}}}};
    const Outcome r = run("spectrum " + config(edit));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("warning:"), std::string::npos);
    EXPECT_NO_THROW(json::parse(r.out));
}
