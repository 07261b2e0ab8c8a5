#include <hdexp/io.hpp>
#include <hdexp/settings.hpp>

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace hdexp;

TEST(Settings, EveryFieldAppearsInCanonicalText) {
    EngineConfig cfg;
    std::string canon = cfg.canonical();
    std::set<std::string> names;
    for (const auto& s : settings_table()) {
        EXPECT_NE(canon.find(std::string(s.name) + "="), std::string::npos) << s.name;
        EXPECT_TRUE(names.insert(s.name).second) << "duplicate " << s.name;
    }
    EXPECT_EQ(static_cast<std::size_t>(std::count(canon.begin(), canon.end(), '=')), names.size());
}

TEST(Settings, ApplyParsesEachType) {
    EngineConfig cfg;
    apply_setting(cfg, "n-s", "40");
    apply_setting(cfg, "delta", " 0.04 ");
    apply_setting(cfg, "oracle_budget", "123456789012");
    apply_setting(cfg, "per_cell_seed", "true");
    EXPECT_EQ(cfg.n_s, 40);
    EXPECT_EQ(cfg.delta, 0.04);
    EXPECT_EQ(cfg.oracle_budget, 123456789012);
    EXPECT_TRUE(cfg.per_cell_seed);
    EXPECT_THROW(apply_setting(cfg, "n_s", "4.5"), DomainError);
    EXPECT_THROW(apply_setting(cfg, "bogus", "1"), DomainError);
    EXPECT_THROW(apply_setting(cfg, "per_cell_seed", "maybe"), DomainError);
}

TEST(Settings, ConfigTextWithComments) {
    EngineConfig cfg;
    std::istringstream in("# reference run\nsteps = 500  # shorter\n\nburn_in=20\n");
    read_config_text(cfg, in);
    EXPECT_EQ(cfg.steps, 500);
    EXPECT_EQ(cfg.burn_in, 20);
    std::istringstream bad("steps 500\n");
    EXPECT_THROW(read_config_text(cfg, bad), DomainError);
}

TEST(Provenance, HashTracksConfigOnly) {
    EngineConfig a, b;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.steps = 1999;
    EXPECT_NE(config_hash(a), config_hash(b));
    auto lines = provenance_lines("pressure", a, 7);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_NE(lines[1].find("seed=7"), std::string::npos);
    EXPECT_NE(lines[1].find(config_hash(a)), std::string::npos);
    std::ostringstream os;
    write_provenance(os, "pressure", a, 7);
    EXPECT_EQ(os.str().substr(0, 2), "# ");
}

TEST(TauSchedule, StaysAdmissible) {
    EngineConfig cfg;
    for (double t = 1.02; t < 4.0; t += 0.01) {
        double tau = tau_schedule(t, cfg);
        EXPECT_GT(tau, 0.0);
        EXPECT_LT(tau, 1.0);
        EXPECT_GT(tau * t, 1.0);
    }
}
