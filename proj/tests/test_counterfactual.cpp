#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "didinv/analytic.hpp"
#include "didinv/counterfactual.hpp"
#include "didinv/mixture.hpp"
#include "test_support.hpp"

using namespace didinv;
using Catch::Approx;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

FourCells three(std::vector<double> f10, std::vector<double> f01, std::vector<double> f00) {
    const std::vector<double> s{0, 1, 2};
    const DiscreteDistribution d00(s, f00), d01(s, f01), d10(s, f10);
    return FourCells(d00, d01, d10, d10);
}

double max_shift_did(const FourCells& cells) {
    double worst = std::abs(did_att(cells, MonotoneTransform::identity()));
    for (double y : cells.support()) worst = std::max(worst, std::abs(did_att(cells, MonotoneTransform::indicator_shift(y))));
    return worst;
}

} // namespace

TEST_CASE("implied_counterfactual: examples", "[counterfactual]") {
    const DiscreteDistribution d({0, 1, 2}, {0.2, 0.5, 0.3});
    const auto same = implied_counterfactual(FourCells(d, d, d, DiscreteDistribution::point_mass(9)));
    CHECK(same.is_proper);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same.pmf.masses()[i] == Approx(d.masses()[i]).margin(1e-15));

    const auto ok = implied_counterfactual(three({0.5, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.4, 0.4, 0.2}));
    CHECK(ok.pmf.masses()[0] == Approx(0.3));
    CHECK(ok.pmf.masses()[1] == Approx(0.4));
    CHECK(ok.pmf.masses()[2] == Approx(0.3));
    CHECK(ok.is_proper);

    const auto bad = implied_counterfactual(three({0.1, 0.9, 0}, {0.5, 0.5, 0}, {0.7, 0.3, 0}));
    CHECK(bad.pmf.masses()[0] == Approx(-0.1));
    CHECK(bad.pmf.masses()[1] == Approx(1.1));
    CHECK(bad.pmf.masses()[2] == 0.0);
    CHECK(bad.min_mass == Approx(-0.1));
    CHECK(bad.argmin == 0.0);
    CHECK_FALSE(bad.is_proper);
    CHECK_FALSE(bad.cdf.is_monotone());
}

TEST_CASE("implied_counterfactual: never reads the treated post cell", "[counterfactual]") {
    testing::Engine eng(2);
    const auto s = testing::random_support(eng, 6);
    const auto a = testing::random_pmf(eng, s), b = testing::random_pmf(eng, s), c = testing::random_pmf(eng, s);
    const auto x = implied_counterfactual(FourCells(a, b, c, testing::random_pmf(eng, s)));
    const auto y = implied_counterfactual(FourCells(a, b, c, testing::random_pmf(eng, s)));
    CHECK(vec(x.pmf.masses()) == vec(y.pmf.masses()));
    CHECK(cic_counterfactual(FourCells(a, b, c, a)) == cic_counterfactual(FourCells(a, b, c, b)));
}

TEST_CASE("implied_counterfactual: mass sums to one", "[counterfactual][property]") {
    testing::Engine eng(8);
    for (int rep = 0; rep < 300; ++rep) {
        const auto imp = implied_counterfactual(testing::random_quadruple(eng));
        CHECK(detail::sum(imp.pmf.masses()) == Approx(1.0).margin(1e-12));
        CHECK(imp.cdf.values.back() == Approx(1.0).margin(1e-12));
        CHECK(imp.min_mass == *std::min_element(imp.pmf.masses().begin(), imp.pmf.masses().end()));
    }
}

TEST_CASE("check_cdf_parallel: examples", "[counterfactual]") {
    const DiscreteDistribution d({0, 1, 2}, {0.2, 0.5, 0.3});
    const auto same = check_cdf_parallel(FourCells(d, d, d, d), 0.0);
    CHECK(same.holds);
    CHECK(same.max_abs_deviation == 0.0);

    testing::Engine eng(4);
    for (int rep = 0; rep < 50; ++rep) {
        CHECK(check_cdf_parallel(build_case3_quadruple(testing::random_case3_spec(eng)), 1e-12).holds);
    }

    const std::array laws{NormalLaw{0, 1}, NormalLaw{0, 1}, NormalLaw{1, 1}, NormalLaw{1, 2}};
    const auto grid = truncation_grid<NormalLaw>(laws, 0.1);
    const FourCells normals(discretize_law(laws[0], grid), discretize_law(laws[1], grid), discretize_law(laws[2], grid),
                            discretize_law(laws[3], grid));
    const auto chk = check_cdf_parallel(normals, 1e-12);
    CHECK_FALSE(chk.holds);
    CHECK(chk.max_abs_deviation > 0.05);
}

TEST_CASE("did_att: examples", "[counterfactual]") {
    using P = DiscreteDistribution;
    const FourCells pm(P::point_mass(0), P::point_mass(1), P::point_mass(2), P::point_mass(4));
    CHECK(did_att(pm, MonotoneTransform::identity()) == 1.0);

    const DiscreteDistribution d({1, 2, 5}, {0.2, 0.5, 0.3});
    const FourCells same(d, d, d, d);
    CHECK(did_att(same, MonotoneTransform::identity()) == 0.0);
    CHECK(did_att(same, MonotoneTransform::log()) == 0.0);
    CHECK(did_att(same, MonotoneTransform::indicator_shift(2)) == 0.0);

    const FourCells log_cells(P::point_mass(2.5), P::point_mass(3.0), P::point_mass(3.0), P::point_mass(3.5));
    CHECK(did_att(log_cells, MonotoneTransform::identity()) == 0.0);

    CHECK_THROWS_AS(did_att(FourCells(P::point_mass(0), P::point_mass(1), P::point_mass(2), P::point_mass(4)),
                            MonotoneTransform::log()),
                    DomainError);
}

TEST_CASE("did_att: zero for every transform on parallel quadruples", "[counterfactual][property]") {
    testing::Engine eng(31);
    for (int rep = 0; rep < 60; ++rep) {
        const auto cells = build_case3_quadruple(testing::random_case3_spec(eng, 30));
        REQUIRE(check_cdf_parallel(cells, 1e-13).holds);
        const auto s = cells.support();
        std::vector<MonotoneTransform> gs{MonotoneTransform::identity(), MonotoneTransform::log()};
        for (int i = 0; i < 25; ++i) {
            gs.push_back(MonotoneTransform::affine(testing::uniform(eng, 0.01, 10), testing::uniform(eng, -50, 50)));
            gs.push_back(MonotoneTransform::indicator_shift(s[testing::uniform_index(eng, s.size())]));
        }
        for (int i = 0; i < 10; ++i) gs.push_back(testing::random_table(eng, s.front(), s.back()));
        for (const auto& g : gs) CHECK(std::abs(did_att(cells, g)) <= 1e-10);
    }
}

TEST_CASE("did_att: identity plus indicator shifts detect any CDF deviation", "[counterfactual][property]") {
    testing::Engine eng(32);
    for (int rep = 0; rep < 200; ++rep) {
        const auto cells = rep % 2 == 0 ? build_case3_quadruple(testing::random_case3_spec(eng, 20))
                                        : testing::random_quadruple(eng);
        const double shift = max_shift_did(cells);
        const auto chk = check_cdf_parallel(cells, 1e-10);
        if (shift <= 1e-10) CHECK(chk.holds);
        // The shift at y moves the DiD by exactly the CDF deviation at y.
        CHECK(shift >= chk.max_abs_deviation - 1e-12);
    }
}

TEST_CASE("binary outcomes: CDF parallel iff DiD of means is zero", "[counterfactual][property]") {
    testing::Engine eng(33);
    int parallel = 0;
    for (int rep = 0; rep < 400; ++rep) {
        std::array<double, 4> p{};
        for (double& x : p) x = static_cast<double>(testing::uniform_index(eng, 17)) / 16.0;
        if (rep % 2 == 0) {
            const double p11 = p[2] + p[1] - p[0];
            if (p11 >= 0.0 && p11 <= 1.0) p[3] = p11;
        }
        auto bern = [](double q) { return DiscreteDistribution({0, 1}, {1 - q, q}); };
        const FourCells cells(bern(p[0]), bern(p[1]), bern(p[2]), bern(p[3]));
        const bool did_zero = did_att(cells, MonotoneTransform::identity()) == 0.0;
        parallel += did_zero;
        CHECK(check_cdf_parallel(cells, 0.0).holds == did_zero);
    }
    CHECK(parallel > 50);
}

TEST_CASE("cic_counterfactual: identical cells", "[counterfactual]") {
    testing::Engine eng(40);
    for (int rep = 0; rep < 100; ++rep) {
        const auto s = testing::random_support(eng, 1 + testing::uniform_index(eng, 15));
        const auto d = testing::random_pmf(eng, s);
        const auto out = cic_counterfactual(FourCells(d, d, d, d));
        const auto want = cdf(d);
        const auto got = cdf(out);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(got.values[i] == Approx(want.values[i]).margin(1e-12));
    }
}

namespace {

/// sup-CDF error of the discretized CiC counterfactual against the discretized
/// closed-form law `target`; cells are (0,0), (0,1), (1,0).
double cic_error(const std::array<NormalLaw, 4>& laws, double width) {
    const auto grid = truncation_grid<NormalLaw>(laws, width);
    const FourCells cells(discretize_law(laws[0], grid), discretize_law(laws[1], grid), discretize_law(laws[2], grid),
                          discretize_law(laws[3], grid));
    const auto got = cdf(cic_counterfactual(cells));
    const auto want = cdf(cells.dist(1, 1));
    double err = 0.0;
    for (std::size_t i = 0; i < want.values.size(); ++i) err = std::max(err, std::abs(got.values[i] - want.values[i]));
    return err;
}

} // namespace

TEST_CASE("cic_counterfactual: Gaussian quantile map", "[counterfactual]") {
    // Shifts that are whole numbers of bins map bins onto bins exactly.
    for (double w : {0.2, 0.05, 0.0125}) {
        CHECK(cic_error({NormalLaw{0, 1}, NormalLaw{2, 1}, NormalLaw{1, 1}, NormalLaw{3, 1}}, w) < 1e-9);
    }
    // N(0.3, 1.5^2) mapped through N(0,1) onto N(1,1) gives N(1.8, 1.5^2).
    const std::array laws{NormalLaw{0, 1}, NormalLaw{0.3, 1.5}, NormalLaw{1, 1}, NormalLaw{1.8, 1.5}};
    double previous = 1.0;
    for (double w : {0.2, 0.05, 0.0125}) {
        const double err = cic_error(laws, w);
        CHECK(err < previous);
        previous = err;
    }
    CHECK(previous < 0.01);
}

TEST_CASE("cic_counterfactual: always proper", "[counterfactual][property]") {
    testing::Engine eng(41);
    for (int rep = 0; rep < 300; ++rep) {
        const auto out = cic_counterfactual(testing::random_quadruple(eng));
        for (double m : out.masses()) CHECK(m >= 0.0);
    }
}

TEST_CASE("counterfactual_divergence: example3 quadruple differs from CiC", "[counterfactual]") {
    const auto div = counterfactual_divergence(example3_quadruple(0.5));
    CHECK_FALSE(div.used_positive_part);
    CHECK(div.sup_distance > 0.01);

    const auto bad = counterfactual_divergence(three({0.1, 0.9, 0}, {0.5, 0.5, 0}, {0.7, 0.3, 0}));
    CHECK(bad.used_positive_part);
}
