#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "isrbcd/sampling.hpp"
#include "test_util.hpp"

using namespace isrbcd;

namespace {

std::vector<double> random_z(std::mt19937_64& rng, std::size_t m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution zero(0.2);
    std::vector<double> z(m);
    for (auto& v : z) v = zero(rng) ? 0.0 : std::pow(10.0, 6.0 * u(rng) - 3.0);
    return z;
}

// |count/draws - p| within 3 sigma for every category
void check_frequencies(const SamplingDistribution& dist, std::size_t draws, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> count(dist.probs.size(), 0);
    for (std::size_t k = 0; k < draws; ++k) ++count[sample_block(dist, rng)];
    for (std::size_t i = 0; i < count.size(); ++i) {
        const double p = dist.probs[i];
        const double sd = std::sqrt(p * (1 - p) / static_cast<double>(draws));
        CHECK(std::abs(static_cast<double>(count[i]) / static_cast<double>(draws) - p) <= 3 * sd);
    }
}

} // namespace

TEST_CASE("importance examples") {
    const auto d = importance_probabilities({1.0, 0.0}, 0.5);
    CHECK(d.probs[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(d.probs[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        const auto z = random_z(rng, 1 + rng() % 50);
        for (double p : importance_probabilities(z, 1.0).probs) CHECK(p == 1.0 / static_cast<double>(z.size()));
        const std::vector<double> flat(z.size(), 0.37);
        for (double p : importance_probabilities(flat, 0.3).probs)
            CHECK(p == doctest::Approx(1.0 / static_cast<double>(z.size())).epsilon(1e-14));
    }
    for (double p : importance_probabilities({0.0, 0.0, 0.0}, 0.2).probs) CHECK(p == 1.0 / 3.0);
    CHECK_THROWS_AS(importance_probabilities({1.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(importance_probabilities({1.0}, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(importance_probabilities({-1.0, 1.0}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(importance_probabilities({}, 0.5), std::invalid_argument);
}

TEST_CASE("distribution properties on random inputs") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ee(1e-3, 1.0), aa(-6.0, 6.0);
    for (int t = 0; t < 5000; ++t) {
        const std::size_t m = 1 + rng() % 200;
        const auto z = random_z(rng, m);
        const double eps = t % 10 == 0 ? 1.0 : ee(rng);
        const auto p = importance_probabilities(z, eps).probs;
        const double sum = std::accumulate(p.begin(), p.end(), 0.0);
        REQUIRE(std::abs(sum - 1.0) <= 1e-12);
        for (double pi : p) REQUIRE(pi >= eps / static_cast<double>(m) * (1 - 1e-14));

        const double alpha = std::pow(10.0, aa(rng));
        std::vector<double> scaled(z);
        for (auto& v : scaled) v *= alpha;
        const auto q = importance_probabilities(scaled, eps).probs;
        for (std::size_t i = 0; i < m; ++i) REQUIRE(q[i] == doctest::Approx(p[i]).epsilon(1e-12));

        if (eps < 1.0) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    if (z[i] > z[j] * (1 + 1e-12)) REQUIRE(p[i] > p[j]);
        }
    }
}

TEST_CASE("sampling frequencies") {
    check_frequencies(uniform_distribution(4), 100000, 3);
    check_frequencies(importance_probabilities({1.0, 0.0}, 0.5), 300000, 4);
    check_frequencies(importance_probabilities({0.1, 3.0, 0.0, 1.0, 2.0}, 0.2), 300000, 5);
}

TEST_CASE("sampling is deterministic") {
    const auto d = importance_probabilities({0.1, 3.0, 0.0, 1.0}, 0.2);
    Rng a(42), b(42);
    for (int k = 0; k < 1000; ++k) CHECK(sample_block(d, a) == sample_block(d, b));
}

TEST_CASE("uniform selector equals importance selector with eps 1") {
    UniformSelector u(17, 99);
    ImportanceSelector s(17, 1.0, 99);
    std::mt19937_64 rng(6);
    s.initialize_violations({random_z(rng, 17), true});
    for (int k = 0; k < 5000; ++k) {
        const std::size_t a = u.next_block();
        const std::size_t b = s.next_block();
        REQUIRE(a == b);
        REQUIRE(a < 17);
        s.observe_update(b, random_z(rng, 1)[0]);
    }
}

TEST_CASE("cyclic order") {
    std::size_t counter = 0;
    for (int k = 0; k < 9; ++k) CHECK(cyclic_next(counter, 3) == static_cast<std::size_t>(k % 3));
    counter = 0;
    for (int k = 0; k < 5; ++k) CHECK(cyclic_next(counter, 1) == 0);
    CyclicSelector c(4);
    for (int k = 0; k < 12; ++k) CHECK(c.next_block() == static_cast<std::size_t>(k % 4));
    CHECK_THROWS_AS(CyclicSelector(0), std::invalid_argument);
}

TEST_CASE("selector kinds") {
    CHECK(parse_sampler_kind("uniform") == SamplerKind::uniform);
    CHECK(parse_sampler_kind("cyclic") == SamplerKind::cyclic);
    CHECK(parse_sampler_kind("importance") == SamplerKind::importance);
    CHECK_THROWS_AS(parse_sampler_kind("greedy"), std::invalid_argument);
    for (auto k : {SamplerKind::uniform, SamplerKind::cyclic, SamplerKind::importance})
        CHECK(parse_sampler_kind(to_string(k)) == k);
    CHECK_THROWS_AS(ImportanceSelector(4, 0.0, 1), std::invalid_argument);
    CHECK_FALSE(ImportanceSelector(1, 0.2, 1).wants_violations());
    CHECK(ImportanceSelector(2, 0.2, 1).wants_violations());
    CHECK_FALSE(UniformSelector(3, 1).wants_violations());
}

TEST_CASE("initial violations") {
    auto p = testutil::make_problem(30, 12, 7, 0.0, std::make_shared<L1Penalty>());
    const auto part = make_uniform_partition(12, 4);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(12);
    const Eigen::VectorXd margins = Eigen::VectorXd::Zero(30);
    FlopCounter f;
    const auto z = init_violations(p, part, x0, margins, &f);
    CHECK(z.exact_at_init);
    CHECK(f.gradient_flops == 2 * 30 * 12 + 30);
    const Eigen::VectorXd half = 0.5 * (Eigen::MatrixXd(p.features).transpose() * p.labels);
    for (std::size_t i = 0; i < 4; ++i) {
        const Eigen::VectorXd hi = block_slice(half, part, i);
        CHECK(z.approx[i] == doctest::Approx(hi.cwiseAbs().maxCoeff()).epsilon(1e-14));
    }
    p.lambda = half.cwiseAbs().maxCoeff();
    const auto z0 = init_violations(p, part, x0, margins);
    CHECK(z0.max() == 0.0);
    for (double v : z0.approx) CHECK(v == 0.0);
}

TEST_CASE("update_violation touches one entry") {
    const L1Penalty l1;
    ViolationVector z{{0.3, 0.4, 0.5}, true};
    Eigen::VectorXd xb(2), gb(2);
    xb << 1.0, 0.0;
    gb << -1.0, 0.5;
    update_violation(z, 1, xb, gb, l1, 1.0);
    CHECK(z.approx == std::vector<double>{0.3, 0.0, 0.5});
    gb << -1.0, 1.5;
    update_violation(z, 2, xb, gb, l1, 1.0);
    CHECK(z.approx[2] == doctest::Approx(0.5));
    CHECK(z.approx[0] == 0.3);
    CHECK_THROWS_AS(update_violation(z, 3, xb, gb, l1, 1.0), std::invalid_argument);
}
