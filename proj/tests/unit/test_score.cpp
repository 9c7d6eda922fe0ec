#include "doctest.h"

#include <cmath>
#include <random>

#include "hps/error.hpp"
#include "hps/score.hpp"

using namespace hps;

namespace {

// Independent long-double evaluation without max subtraction (fine for the
// magnitudes used where it is compared).
long double naive_lse(const std::vector<std::int64_t>& d, long double t)
{
    long double s = 0;
    for (auto x : d)
        s += std::exp(static_cast<long double>(x) / t);
    return t * std::log(s);
}

} // namespace

TEST_SUITE("score") {

TEST_CASE("logsumexp examples")
{
    const std::vector<std::int64_t> one{5};
    CHECK(logsumexp_footprint(one, 1.0) == doctest::Approx(5.0).epsilon(1e-15));
    const std::vector<std::int64_t> pair{4, 4};
    CHECK(logsumexp_footprint(pair, 2.0) == doctest::Approx(5.386294361119890).epsilon(1e-14));
    // 8 + ln(1 + e^-1), 40-digit reference: 8.313261687518222834...
    const std::vector<std::int64_t> fig{7, 8};
    CHECK(std::abs(logsumexp_footprint(fig, 1.0) - 8.3132616875182228) < 1e-12);
    CHECK(std::abs(logsumexp_footprint(fig, 1.0) - static_cast<double>(8.0L + std::log1p(std::exp(-1.0L)))) < 1e-12);
    CHECK_THROWS_AS(logsumexp_footprint(std::vector<std::int64_t>{}, 1.0), ContractViolation);
}

TEST_CASE("reduction ratio")
{
    CHECK(std::abs(reduction_ratio(18, 8.3133) - 0.538150) < 1e-6);
    CHECK(render_score(reduction_ratio(18, 8.3133)) == "0.54");
    CHECK(reduction_ratio(10, 12.0) == 0.0);
    for (std::int64_t d = 1; d < 50; ++d)
        CHECK(reduction_ratio(d, static_cast<double>(d)) == 0.0);
    CHECK_THROWS_AS(reduction_ratio(0, 1.0), ContractViolation);
}

TEST_CASE("worked example score")
{
    ValidityGate gate{true, {true, true}};
    const std::vector<std::int64_t> kids{7, 8};
    const auto s = decomposition_score(gate, 18, kids, ScoreConfig{});
    CHECK(s.v == 1);
    CHECK(s.d_parent == 18);
    CHECK(s.d_children == kids);
    CHECK(std::abs(s.r - 0.5381521284712098) < 1e-12);
    CHECK(s.S == s.r);
    CHECK(render_score(s.S) == "0.54");
}

TEST_CASE("gate zeroes the score")
{
    const std::vector<std::int64_t> kids{1, 2};
    CHECK(decomposition_score({true, {true, false}}, 18, kids, {}).S == 0.0);
    CHECK(decomposition_score({false, {true, true}}, 18, kids, {}).S == 0.0);
    CHECK(decomposition_score({false, {true, true}}, 18, kids, {}).v == 0);
    CHECK_THROWS_AS(decomposition_score({true, {true, true}}, 0, kids, {}), ContractViolation);
}

TEST_CASE("direct discharge convention")
{
    const auto s = decomposition_score({true, {}}, 5, std::vector<std::int64_t>{}, {});
    CHECK(s.r == 1.0);
    CHECK(s.S == 1.0);
    CHECK(decomposition_score({false, {}}, 5, std::vector<std::int64_t>{}, {}).S == 0.0);
}

TEST_CASE("aggregate properties over random inputs")
{
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::int64_t> fp(0, 10'000);
    std::uniform_int_distribution<int> kd(1, 8);
    std::uniform_real_distribution<double> td(0.1, 10.0);
    for (int i = 0; i < 2000; ++i) {
        std::vector<std::int64_t> d(static_cast<std::size_t>(kd(rng)));
        for (auto& x : d)
            x = fp(rng);
        const double t = td(rng);
        const double m = static_cast<double>(*std::max_element(d.begin(), d.end()));
        const double lse = logsumexp_footprint(d, t);
        REQUIRE(std::isfinite(lse));
        CHECK(lse >= m);
        CHECK(lse <= m + t * std::log(static_cast<double>(d.size())) + 1e-9);

        // lowering one child never raises the aggregate (strictness is
        // checked below where doubles can resolve it)
        const auto j = static_cast<std::size_t>(rng() % d.size());
        if (d[j] > 0) {
            auto lower = d;
            --lower[j];
            CHECK(logsumexp_footprint(lower, t) <= lse);
        }
        if (d.size() >= 2)
            CHECK(logsumexp_footprint(d, t * 1.5) >= lse);

        // relative error against an unshifted long-double evaluation when it
        // does not overflow (exp(x) stays below ~1e4900)
        if (m / t < 11000) {
            const auto ref = naive_lse(d, t);
            CHECK(std::abs(static_cast<long double>(lse) - ref) / ref < 1e-9L);
        }
    }
}

TEST_CASE("partial progress is visible")
{
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::int64_t> fp(1, 12);
    std::uniform_real_distribution<double> td(0.5, 10.0);
    for (int i = 0; i < 2000; ++i) {
        std::vector<std::int64_t> d(static_cast<std::size_t>(2 + rng() % 4));
        for (auto& x : d)
            x = fp(rng);
        const double t = td(rng);
        for (std::size_t j = 0; j < d.size(); ++j) {
            auto lower = d;
            --lower[j];
            CHECK(logsumexp_footprint(lower, t) < logsumexp_footprint(d, t));
            CHECK(reduction_ratio(60, logsumexp_footprint(lower, t)) >= reduction_ratio(60, logsumexp_footprint(d, t)));
        }
    }
}

TEST_CASE("temperature must be positive")
{
    ScoreConfig c;
    c.temperature = 0;
    CHECK_THROWS(c.validate());
    c.temperature = -1;
    CHECK_THROWS(c.validate());
}

}
