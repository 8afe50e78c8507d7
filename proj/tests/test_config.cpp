#include <doctest.h>

#include "deflab/config.hpp"
#include "deflab/csv.hpp"
#include "deflab/report.hpp"

using namespace deflab;

TEST_CASE("key-value parsing with sections and comments") {
    const auto cfg = KeyValueConfig::parse_string(
        "# demo\n"
        "scenario = never-cross\n"
        "seed = 42\n"
        "[grid]\n"
        "horizon = 20.0   # inline comment\n"
        "steps = 200000\n");
    CHECK(cfg.get_string("scenario") == "never-cross");
    CHECK(cfg.get_u64("seed", 0) == 42);
    CHECK(cfg.get_double("grid.horizon", 0.0) == doctest::Approx(20.0));
    CHECK(cfg.get_size("grid.steps", 0) == 200000);
    CHECK(cfg.get_double("missing", 7.0) == 7.0);
}

TEST_CASE("parse errors carry line numbers") {
    try {
        KeyValueConfig::parse_string("a = 1\nnonsense line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
    }
    const auto cfg = KeyValueConfig::parse_string("x = abc\n");
    CHECK_THROWS_AS(cfg.get_double("x", 0.0), ConfigError);
}

TEST_CASE("report lines and verdicts") {
    RunReport rep;
    rep.scenario = "demo";
    rep.add(check_le("stat-a", 0.01, 0.02));
    rep.add(check_in("stat-b", 1.0, 0.99, 1.01));
    rep.add(info_line("note", "diagnostic only"));
    CHECK(rep.passed());
    rep.add(check_ge("stat-c", 0.001, 0.01));
    CHECK_FALSE(rep.passed());
    CHECK(rep.first_failure() == "stat-c");
    const auto text = rep.to_text();
    CHECK(text.find("[PASS] stat-a") != std::string::npos);
    CHECK(text.find("[FAIL] stat-c") != std::string::npos);
    CHECK(text.find("[INFO] note") != std::string::npos);
    CHECK(text.find("RESULT: FAIL") != std::string::npos);
}

TEST_CASE("csv formatting carries 17 significant digits") {
    CHECK(fmt_g17(1.0) == "1");
    const double x = 0.1234567890123456789;
    CHECK(fmt_g17(x).size() >= 17);
}
