// Runs the hdexp executable and checks exit codes and artifact headers.

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string(HDEXP_CLI) + " " + args + " 2>/dev/null";
    Run r{0, {}};
    FILE* p = popen(cmd.c_str(), "r");
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

const char* kQuick = "--n-s 32 --n-phi 17 --steps 260";

}  // namespace

TEST(Cli, MissingRequiredFlagIsUsageError) { EXPECT_EQ(run("pressure --r 0").code, 2); }

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run("frobnicate").code, 2); }

TEST(Cli, InvalidLawIsUsageError) { EXPECT_EQ(run("pressure --a 0.5").code, 2); }

TEST(Cli, BadConfigKeyIsUsageError) {
    std::string path = ::testing::TempDir() + "bad.cfg";
    std::ofstream(path) << "nonsense = 3\n";
    EXPECT_EQ(run("--config " + path + " pressure --a 0.18").code, 2);
}

TEST(Cli, PressureHeaderAndRows) {
    auto r = run(std::string("pressure --a 0.18 --r 0 --t-grid 1.5,1.7 ") + kQuick);
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("# hdexp ", 0), 0u);
    EXPECT_NE(r.out.find("seed=7"), std::string::npos);
    EXPECT_NE(r.out.find("config_hash="), std::string::npos);
    EXPECT_NE(r.out.find("\nt,tau,value,std_error,N,burn_in\n1.5,"), std::string::npos);
}

TEST(Cli, ConfigFileOverriddenByFlags) {
    std::string path = ::testing::TempDir() + "ok.cfg";
    std::ofstream(path) << "steps = 270\nburn_in = 60\n";
    auto r = run("--config " + path + " pressure --a 0.18 --n-s 32 --n-phi 17 --burn-in 55");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("steps=270;burn_in=55;"), std::string::npos);
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
    std::string args = std::string("pressure --a 0.18 --r 0.002 --t-grid 1.4 ") + kQuick;
    auto a = run("--threads 1 " + args), b = run("--threads 3 " + args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, VerifyExitCodeFollowsAudit) {
    std::string light = " --audit-samples 2000 --audit-steps 300 --decay-steps 100";
    EXPECT_EQ(run("verify --a 0.18" + light).code, 0);
    EXPECT_EQ(run("verify --a 0.18 --kappa-max 0.1" + light).code, 1);
}

TEST(Cli, OracleBudgetFailureIsComputationError) {
    EXPECT_EQ(run("oracle --a 0.18 --depth 6 --rel-tol 1e-6 --oracle-budget 1000").code, 1);
}
