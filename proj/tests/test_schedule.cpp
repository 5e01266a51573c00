#include "demorph/schedule.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace demorph;

TEST_SUITE("schedule") {

TEST_CASE("paper constants: linear 1e-4 .. 0.02 over 1000 steps") {
    const auto s = linear_schedule(1000, 1e-4, 0.02);
    CHECK(s.T == 1000);
    CHECK(s.beta.front() == 1e-4);
    CHECK(s.beta.back() == 0.02);
    CHECK(s.alpha_bar[0] == doctest::Approx(0.9999).epsilon(1e-12));
}

TEST_CASE("alpha_bar matches a direct sequential product oracle") {
    const auto s = linear_schedule(1000, 1e-4, 0.02);
    // oracle: recompute the betas from the linear rule and multiply one by one
    for (int t_probe : {1, 500, 1000}) {
        double prod = 1.0;
        for (int t = 1; t <= t_probe; ++t) {
            const double b = 1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0;
            prod *= 1.0 - b;
        }
        CHECK(std::abs(s.alpha_bar_at(t_probe) - prod) / prod < 1e-12);
    }
}

TEST_CASE("sequence identities hold exactly") {
    const auto s = linear_schedule(200, 1e-4, 0.02);
    for (int t = 1; t <= s.T; ++t) {
        CHECK(s.alpha[t - 1] == 1.0 - s.beta[t - 1]);
        CHECK(s.alpha_bar[t - 1] == s.alpha_bar_at(t - 1) * s.alpha[t - 1]);
        CHECK(s.beta_tilde[t - 1] ==
              (1.0 - s.alpha_bar_at(t - 1)) / (1.0 - s.alpha_bar_at(t)) * s.beta[t - 1]);
    }
    CHECK(s.beta_tilde[0] == 0.0);  // alpha_bar(0) == 1 by definition
}

TEST_CASE("monotonicity and range invariants") {
    const auto s = linear_schedule(500, 1e-4, 0.02);
    for (int t = 1; t <= s.T; ++t) {
        CHECK(s.beta[t - 1] > 0.0);
        CHECK(s.beta[t - 1] < 1.0);
        if (t > 1) {
            CHECK(s.beta[t - 1] >= s.beta[t - 2]);
            CHECK(s.alpha_bar[t - 1] < s.alpha_bar[t - 2]);
        }
    }
    CHECK(s.alpha_bar[s.T - 1] < s.alpha_bar[0]);
    CHECK(s.alpha_bar[0] < 1.0);
}

TEST_CASE("invalid bounds are rejected") {
    CHECK_THROWS_AS(linear_schedule(0, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(linear_schedule(10, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(linear_schedule(10, 0.03, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(linear_schedule(10, 1e-4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(linear_schedule(10, -1e-4, 0.02), std::invalid_argument);
}

TEST_CASE("T=1 degenerate schedule") {
    const auto s = linear_schedule(1, 0.01, 0.02);
    CHECK(s.beta[0] == 0.01);
    CHECK(s.beta_tilde[0] == 0.0);
}

TEST_CASE("csv dump has one row per step") {
    const auto s = linear_schedule(10, 1e-4, 0.02);
    std::ostringstream out;
    dump_schedule_csv(s, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,beta,alpha,alpha_bar,beta_tilde");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 10);
}

TEST_CASE("schedule hash detects drift") {
    const auto a = linear_schedule(100, 1e-4, 0.02);
    const auto b = linear_schedule(100, 1e-4, 0.02);
    const auto c = linear_schedule(101, 1e-4, 0.02);
    const auto d = linear_schedule(100, 1e-4, 0.021);
    CHECK(schedule_hash(a) == schedule_hash(b));
    CHECK(schedule_hash(a) != schedule_hash(c));
    CHECK(schedule_hash(a) != schedule_hash(d));
}

}  // TEST_SUITE
