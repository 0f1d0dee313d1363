#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "isrbcd/errors.hpp"
#include "isrbcd/smooth_loss.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace isrbcd;

TEST_CASE("logistic value at zero margins") {
    std::mt19937_64 rng(1);
    const auto y = testutil::random_labels(200, rng);
    const double v = loss_value(LogisticLoss{}, Eigen::VectorXd::Zero(200), y);
    CHECK(v == doctest::Approx(200 * std::log(2.0)).epsilon(1e-14));
    CHECK(v == doctest::Approx(138.629).epsilon(1e-5));
}

TEST_CASE("logistic tail") {
    const LogisticLoss l;
    const double v = l.value(35.0, 1.0);
    CHECK(std::isfinite(v));
    CHECK(v <= 1e-15);
    CHECK(v > 0.0);
    // log1p(e^-35) = e^-35 - e^-70/2 + ...
    CHECK(v == doctest::Approx(std::exp(-35.0)).epsilon(1e-14));
    CHECK(l.value(-800.0, 1.0) == doctest::Approx(800.0));
    CHECK(std::isfinite(l.derivative(-800.0, 1.0)));
    CHECK(l.derivative(800.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("sign symmetry") {
    std::mt19937_64 rng(2);
    const LogisticLoss l;
    for (int t = 0; t < 50; ++t) {
        const auto m = testutil::random_vector(30, rng, 5.0);
        const auto y = testutil::random_labels(30, rng);
        CHECK(loss_value(l, m, y) == loss_value(l, -m, -y));
    }
}

TEST_CASE("non-finite margin throws") {
    Eigen::VectorXd m(2), y(2);
    m << 0.0, std::numeric_limits<double>::infinity();
    y << 1, -1;
    CHECK_THROWS_AS(loss_value(LogisticLoss{}, m, y), numerical_error);
    m[1] = std::nan("");
    CHECK_THROWS_AS(loss_value(LogisticLoss{}, m, y), numerical_error);
}

TEST_CASE("gradient at zero") {
    std::mt19937_64 rng(3);
    const auto A = testutil::random_matrix(40, 12, rng, 0.5);
    const auto y = testutil::random_labels(40, rng);
    const Eigen::VectorXd expect = -0.5 * (Eigen::MatrixXd(A).transpose() * y);
    const Eigen::VectorXd g = full_gradient(LogisticLoss{}, A, Eigen::VectorXd::Zero(40), y);
    CHECK((g - expect).cwiseAbs().maxCoeff() < 1e-14);
    const auto p = make_uniform_partition(12, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const Eigen::VectorXd gi = partial_gradient(LogisticLoss{}, A, Eigen::VectorXd::Zero(40), y, p, i);
        CHECK((gi - expect.segment(static_cast<Eigen::Index>(p.offset(i)), 3)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("partial gradients concatenate to the full gradient") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        const auto A = testutil::random_matrix(25, 17, rng, 0.6);
        const auto y = testutil::random_labels(25, rng);
        const auto x = testutil::random_vector(17, rng);
        const auto c = make_cache(A, x);
        const Eigen::VectorXd g = full_gradient(LogisticLoss{}, A, c.margins, y);
        const auto p = make_uniform_partition(17, 5);
        Eigen::VectorXd cat(17);
        for (std::size_t i = 0; i < 5; ++i) {
            block_slice(cat, p, i) = partial_gradient(LogisticLoss{}, A, c.margins, y, p, i);
        }
        CHECK(cat == g);
    }
}

TEST_CASE("finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> nn(1, 10), dd(1, 8);
    double worst = 0.0;
    for (int t = 0; t < 150; ++t) {
        const std::size_t n = nn(rng), d = dd(rng);
        const auto A = testutil::random_matrix(n, d, rng);
        const auto y = testutil::random_labels(n, rng);
        const auto x = testutil::random_vector(d, rng);
        const auto c = make_cache(A, x);
        const Eigen::VectorXd fd = oracle::fd_gradient(Eigen::MatrixXd(A), y, x);
        worst = std::max(worst, oracle::max_relative_error(full_gradient(LogisticLoss{}, A, c.margins, y), fd));
        const auto p = make_uniform_partition(d, std::min<std::size_t>(d, 3));
        for (std::size_t i = 0; i < p.num_blocks(); ++i) {
            const Eigen::VectorXd gi = partial_gradient(LogisticLoss{}, A, c.margins, y, p, i);
            const Eigen::VectorXd fdi = block_slice(fd, p, i);
            worst = std::max(worst, oracle::max_relative_error(gi, fdi));
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("gradient flop charges") {
    std::mt19937_64 rng(6);
    const auto A = testutil::random_matrix(200, 2000, rng, 0.01);
    const auto y = testutil::random_labels(200, rng);
    const auto p = make_uniform_partition(2000, 100);
    FlopCounter f;
    partial_gradient(LogisticLoss{}, A, Eigen::VectorXd::Zero(200), y, p, 3, &f);
    CHECK(f.gradient_flops == 8200);
    full_gradient(LogisticLoss{}, A, Eigen::VectorXd::Zero(200), y, &f);
    CHECK(f.gradient_flops == 8200 + 2 * 200 * 2000 + 200);
    loss_value(LogisticLoss{}, Eigen::VectorXd::Zero(200), y, &f, 20);
    CHECK(f.cost_flops == 200 * 20 + 200);
    CHECK(f.prox_flops == 0);
    CHECK_THROWS_AS(partial_gradient(LogisticLoss{}, A, Eigen::VectorXd::Zero(200), y, p, 100), std::invalid_argument);
}

TEST_CASE("cache updates") {
    std::mt19937_64 rng(7);
    const auto A = testutil::random_matrix(30, 10, rng, 0.5);
    const auto p = make_uniform_partition(10, 10);
    const auto x = testutil::random_vector(10, rng);
    auto cache = make_cache(A, x);
    const Eigen::VectorXd before = cache.margins;

    const Eigen::VectorXd same = block_slice(x, p, 4);
    update_cache(cache, A, p, 4, same, same);
    CHECK(cache.margins == before);

    Eigen::VectorXd moved = same;
    moved[0] += 0.75;
    update_cache(cache, A, p, 4, same, moved);
    const Eigen::VectorXd col = Eigen::MatrixXd(A).col(4);
    CHECK((cache.margins - (before + 0.75 * col)).cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(update_cache(cache, A, p, 4, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)),
                    std::invalid_argument);
    FlopCounter f;
    refresh_cache(cache, A, x, &f);
    CHECK(f.cost_flops == 300);
    CHECK(cache.updates_since_refresh == 0);
}

TEST_CASE("cache drift") {
    std::mt19937_64 rng(8);
    const auto A = testutil::random_matrix(100, 200, rng, 0.2);
    const auto p = make_uniform_partition(200, 20);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(200);
    auto cache = make_cache(A, x);
    std::uniform_int_distribution<std::size_t> pick(0, 19);
    auto drift = [&] {
        const Eigen::VectorXd exact = A * x;
        return (cache.margins - exact).norm() / exact.norm();
    };
    for (int k = 1; k <= 10000; ++k) {
        const std::size_t i = pick(rng);
        const Eigen::VectorXd old = block_slice(x, p, i);
        const Eigen::VectorXd next = old + testutil::random_vector(10, rng, 0.1);
        block_slice(x, p, i) = next;
        update_cache(cache, A, p, i, old, next);
        if (k == 1000) {
            CHECK(drift() < 1e-8);
        }
    }
    CHECK(cache.updates_since_refresh == 10000);
    CHECK(drift() < 1e-8);
}
