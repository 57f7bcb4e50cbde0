#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "didinv/distributions.hpp"
#include "test_support.hpp"

using namespace didinv;
using Catch::Approx;

namespace {
std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }
} // namespace

TEST_CASE("empirical_pmf: weighted masses", "[distributions]") {
    const std::vector<Observation> obs{{0, 1}, {1, 1}, {1, 2}};
    const auto d = empirical_pmf(obs);
    CHECK(vec(d.support()) == std::vector<double>{0, 1});
    CHECK(vec(d.masses()) == std::vector<double>{0.25, 0.75});
    CHECK(d.total_weight() == 4.0);

    const std::vector<Observation> single{{5, 3}};
    CHECK(empirical_pmf(single) == DiscreteDistribution::point_mass(5));
}

TEST_CASE("empirical_pmf: invalid input", "[distributions]") {
    CHECK_THROWS_AS(empirical_pmf(std::vector<Observation>{}), InputError);
    CHECK_THROWS_AS(empirical_pmf(std::vector<Observation>{{1.0, 0.0}}), InputError);
    CHECK_THROWS_AS(empirical_pmf(std::vector<Observation>{{1.0, -1.0}}), InputError);
    CHECK_THROWS_AS(empirical_pmf(std::vector<Observation>{{NAN, 1.0}}), InputError);
}

TEST_CASE("DiscreteDistribution: invariants enforced", "[distributions]") {
    CHECK_THROWS_AS(DiscreteDistribution({0, 1}, {0.5, 0.6}), InputError);
    CHECK_THROWS_AS(DiscreteDistribution({1, 0}, {0.5, 0.5}), InputError);
    CHECK_THROWS_AS(DiscreteDistribution({0, 0}, {0.5, 0.5}), InputError);
    CHECK_THROWS_AS(DiscreteDistribution({0, 1}, {-0.1, 1.1}), InputError);
    CHECK_NOTHROW(DiscreteDistribution({0, 1}, {0.5, 0.5 + 1e-13}));
}

TEST_CASE("discretize: half-open bins labelled by left edge", "[distributions]") {
    const Binning b{0.25, 0.0, false};
    const auto d = discretize(std::vector<Observation>{{7.10, 1}, {7.20, 1}}, b);
    CHECK(vec(d.support()) == std::vector<double>{7.00});
    CHECK(b.label(7.25) == 7.25);
    CHECK(b.label(7.2499999) == 7.00);
    CHECK(b.label(-0.1) == -0.25);

    const Binning z{0.25, 0.0, true};
    const auto zd = discretize(std::vector<Observation>{{0.0, 1}, {0.10, 1}}, z);
    REQUIRE(zd.size() == 2);
    CHECK(zd.support()[0] == kZeroBinLabel);
    CHECK(zd.support()[1] == 0.0);
    CHECK(vec(zd.masses()) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("discretize: rebinning bin labels is idempotent", "[distributions][property]") {
    testing::Engine eng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const Binning b{testing::uniform(eng, 0.01, 3.0), testing::uniform(eng, -5.0, 5.0), rep % 2 == 0};
        std::vector<Observation> obs;
        for (int i = 0; i < 50; ++i) {
            const double y = i % 7 == 0 ? 0.0 : testing::uniform(eng, -40.0, 40.0);
            obs.push_back({y, testing::uniform(eng, 0.1, 3.0)});
        }
        const auto once = discretize(obs, b);
        std::vector<Observation> relabelled;
        for (const auto& o : obs) relabelled.push_back({b.label(o.outcome), o.weight});
        const auto twice = discretize(relabelled, b);
        CHECK(vec(once.support()) == vec(twice.support()));
        CHECK(vec(once.masses()) == vec(twice.masses()));
    }
}

TEST_CASE("align_supports: union support with zero fill", "[distributions]") {
    const auto a = DiscreteDistribution::point_mass(0);
    const auto b = DiscreteDistribution::point_mass(1);
    auto out = align_supports(std::array{a, b});
    CHECK(vec(out[0].masses()) == std::vector<double>{1, 0});
    CHECK(vec(out[1].masses()) == std::vector<double>{0, 1});

    const DiscreteDistribution c({0, 2}, {0.5, 0.5});
    const DiscreteDistribution e({1}, {1.0});
    out = align_supports(std::array{c, e});
    CHECK(vec(out[0].support()) == std::vector<double>{0, 1, 2});
    CHECK(vec(out[0].masses()) == std::vector<double>{0.5, 0, 0.5});
    CHECK(vec(out[1].masses()) == std::vector<double>{0, 1, 0});

    out = align_supports(std::array{c});
    CHECK(out[0] == c);
    CHECK_THROWS_AS(align_supports(std::span<const DiscreteDistribution>{}), InputError);
}

TEST_CASE("align_supports: CDF values unchanged at original support points", "[distributions][property]") {
    testing::Engine eng(3);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<DiscreteDistribution> ds;
        for (int i = 0; i < 3; ++i) {
            ds.push_back(testing::random_pmf(eng, testing::random_support(eng, 1 + testing::uniform_index(eng, 10))));
        }
        const auto aligned = align_supports(ds);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto before = cdf(ds[i]);
            const auto after = cdf(aligned[i]);
            for (double y : ds[i].support()) CHECK(after(y) == before(y));
        }
    }
}

TEST_CASE("cdf: prefix sums", "[distributions]") {
    const auto c = cdf(DiscreteDistribution({0, 1, 2}, {0.3, 0.4, 0.3}));
    CHECK(c.values[0] == Approx(0.3));
    CHECK(c.values[1] == Approx(0.7));
    CHECK(c.values[2] == Approx(1.0).margin(1e-12));
    CHECK(c.is_monotone());
    CHECK(cdf(DiscreteDistribution::point_mass(4)).values == std::vector<double>{1.0});
    CHECK(c(-1.0) == 0.0);
    CHECK(c(1.5) == Approx(0.7));

    const auto s = cdf(SignedMeasure({0, 1, 2}, {-0.1, 0.6, 0.5}));
    CHECK(s.values[0] == Approx(-0.1));
    CHECK(s.values[1] == Approx(0.5));
    CHECK(s.values[2] == Approx(1.0));
    CHECK_FALSE(s.is_monotone());
}

TEST_CASE("total_variation: examples", "[distributions]") {
    const DiscreteDistribution f({0, 1}, {0.5, 0.5});
    CHECK(total_variation(f, f) == 0.0);
    CHECK(total_variation(DiscreteDistribution::point_mass(0), DiscreteDistribution::point_mass(1)) == 1.0);
    CHECK(total_variation(f, DiscreteDistribution({0, 1}, {0.25, 0.75})) == 0.25);
}

TEST_CASE("total_variation: metric properties on random triples", "[distributions][property]") {
    testing::Engine eng(5);
    for (int rep = 0; rep < 300; ++rep) {
        std::array<DiscreteDistribution, 3> f{
            testing::random_pmf(eng, testing::random_support(eng, 1 + testing::uniform_index(eng, 8), 0.5, 20)),
            testing::random_pmf(eng, testing::random_support(eng, 1 + testing::uniform_index(eng, 8), 0.5, 20)),
            testing::random_pmf(eng, testing::random_support(eng, 1 + testing::uniform_index(eng, 8), 0.5, 20))};
        const double ab = total_variation(f[0], f[1]);
        const double ba = total_variation(f[1], f[0]);
        const double bc = total_variation(f[1], f[2]);
        const double ac = total_variation(f[0], f[2]);
        CHECK(ab == Approx(ba).margin(1e-12));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(ac <= ab + bc + 1e-12);
        CHECK(total_variation(f[0], f[0]) == 0.0);

        // Half the L1 distance.
        const auto al = align_supports(std::array{f[0], f[1]});
        double l1 = 0.0;
        for (std::size_t i = 0; i < al[0].size(); ++i) l1 += std::abs(al[0].masses()[i] - al[1].masses()[i]);
        CHECK(ab == Approx(0.5 * l1).margin(1e-12));
    }
}

TEST_CASE("apply_transform: examples and errors", "[distributions]") {
    const DiscreteDistribution d({1, std::numbers::e}, {0.5, 0.5});
    CHECK(apply_transform(d, MonotoneTransform::identity()) == d);
    const auto l = apply_transform(d, MonotoneTransform::log());
    CHECK(l.support()[0] == 0.0);
    CHECK(l.support()[1] == Approx(1.0));
    CHECK(vec(l.masses()) == std::vector<double>{0.5, 0.5});

    CHECK_THROWS_AS(apply_transform(DiscreteDistribution({0, 1}, {0.5, 0.5}), MonotoneTransform::log()), DomainError);
    CHECK_THROWS_AS(apply_transform(DiscreteDistribution({-1, 1}, {0.5, 0.5}), MonotoneTransform::log()), DomainError);
    // Collision after mapping.
    CHECK_THROWS_AS(apply_transform(DiscreteDistribution({0, 1}, {0.5, 0.5}),
                                    MonotoneTransform::affine(1.0, 1e20)),
                    MonotonicityError);
    CHECK_THROWS_AS(MonotoneTransform::affine(-1.0, 0.0), InputError);
    CHECK_THROWS_AS(MonotoneTransform::table({0, 1}, {1, 0}), InputError);
    CHECK_THROWS_AS(MonotoneTransform::table({0, 0}, {0, 1}), InputError);

    const auto table = MonotoneTransform::table({0, 1, 3}, {0, 10, 12});
    CHECK(table(0.5) == Approx(5.0));
    CHECK(table(2.0) == Approx(11.0));
    CHECK(table(3.0) == 12.0);
    CHECK_THROWS_AS(table(3.5), DomainError);

    const auto shift = MonotoneTransform::indicator_shift(2.0);
    CHECK(shift(2.0) == 1.0);
    CHECK(shift(2.5) == 2.5);
}

TEST_CASE("apply_transform: masses and order preserved", "[distributions][property]") {
    testing::Engine eng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const auto support = testing::random_support(eng, 1 + testing::uniform_index(eng, 30));
        const auto d = testing::random_pmf(eng, support);
        std::vector<MonotoneTransform> gs{MonotoneTransform::identity(), MonotoneTransform::log(),
                                          MonotoneTransform::affine(testing::uniform(eng, 0.1, 5), testing::uniform(eng, -9, 9)),
                                          MonotoneTransform::indicator_shift(support[testing::uniform_index(eng, support.size())]),
                                          MonotoneTransform::table({0.0, 50.0, 200.0}, {-3.0, 1.0, 2.0})};
        for (const auto& g : gs) {
            const auto t = apply_transform(d, g);
            CHECK(vec(t.masses()) == vec(d.masses()));
            for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.support()[i - 1] < t.support()[i]);
        }
    }
}

TEST_CASE("mean: examples", "[distributions]") {
    CHECK(mean(DiscreteDistribution::point_mass(5)) == 5.0);
    CHECK(mean(DiscreteDistribution({0, 1}, {0.5, 0.5})) == 0.5);
    CHECK(mean(DiscreteDistribution({0, 1, 2}, {0.3, 0.4, 0.3})) == Approx(1.0));
}
