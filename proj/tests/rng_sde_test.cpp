#include "helpers.hpp"

#include <catch_amalgamated.hpp>

#include <numeric>

using namespace stoflow;
using namespace testing_support;
using Catch::Approx;

namespace {

// mean and standard error of x^2 over samples, as an estimate of a variance
SampleStats second_moment(const std::vector<double>& xs) {
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = xs[i] * xs[i];
    return sample_stats(sq);
}

SdeSystem linear_drift_system() { return SdeSystem(corpus::make_field({{"name", "r1.linear_drift"}}, 1, "x"), {}); }

SdeSystem torus_system() {
    return SdeSystem(TimeVectorField::zero(2),
                     {torus::fourier_field_A(torus::FourierMode(1, 0)), torus::fourier_field_B(torus::FourierMode(1, 1))});
}

double slope(const std::vector<double>& errors) {
    std::vector<ResultRow> rows;
    for (std::size_t l = 0; l < errors.size(); ++l) rows.push_back({"e", static_cast<int>(l), 0, 1.0, errors[l], {}, {}});
    return estimate_order(rows).at("e");
}

} // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter normals have unit variance and distinct streams") {
    std::vector<double> xs;
    for (std::uint64_t i = 0; i < 20000; ++i) xs.push_back(counter_normal(5, 0, i, 0));
    const auto m = sample_stats(xs);
    CHECK(std::abs(m.mean) < 5.0 * m.std_error);
    const auto v = second_moment(xs);
    CHECK(std::abs(v.mean - 1.0) < 5.0 * v.std_error);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(counter_normal(5, 0, 3, 0) != counter_normal(5, 1, 3, 0));
}

TEST_CASE("sample_brownian contract") {
    const auto a = sample_brownian(2, 1.5, 64, 77);
    const auto b = sample_brownian(2, 1.5, 64, 77);
    CHECK(a == b);
    CHECK(a.values() == b.values());
    CHECK(a.value(0, 0) == 0.0);
    CHECK(a.value(0, 1) == 0.0);
    CHECK(a.time(64) == 1.5);
    CHECK(sample_brownian(2, 1.5, 64, 78).values() != a.values());
    CHECK_THROWS_AS(sample_brownian(1, 1.0, 0, 1), ArgumentError);
    CHECK_THROWS_AS(sample_brownian(1, 0.0, 4, 1), ArgumentError);
    CHECK_THROWS_AS(sample_brownian(1, -1.0, 4, 1), ArgumentError);
}

TEST_CASE("terminal variance of one-step paths") {
    const double T = 0.8;
    std::vector<double> bt;
    for (int i = 0; i < 10000; ++i) bt.push_back(sample_brownian(1, T, 1, derive_seed(123, static_cast<std::uint64_t>(i))).value(1, 0));
    const auto v = second_moment(bt);
    CHECK(std::abs(v.mean - T) < 5.0 * v.std_error);
}

TEST_CASE("increments are centred with variance dt and uncorrelated across drivers") {
    const auto p = sample_brownian(2, 2.0, 20000, 9);
    std::vector<double> d0, d1, cross;
    for (int j = 0; j < p.steps(); ++j) {
        d0.push_back(p.increment(j, 0));
        d1.push_back(p.increment(j, 1));
        cross.push_back(p.increment(j, 0) * p.increment(j, 1));
    }
    const auto v0 = second_moment(d0), v1 = second_moment(d1);
    CHECK(std::abs(v0.mean - p.dt()) < 5.0 * v0.std_error);
    CHECK(std::abs(v1.mean - p.dt()) < 5.0 * v1.std_error);
    const auto c = sample_stats(cross);
    CHECK(std::abs(c.mean) < 5.0 * c.std_error);
}

TEST_CASE("bridge refinement keeps coarse values") {
    const auto p = sample_brownian(3, 1.0, 16, 4);
    const auto r = refine_brownian(p);
    REQUIRE(r.steps() == 32);
    for (int j = 0; j <= 16; ++j)
        for (int k = 0; k < 3; ++k) CHECK(r.value(2 * j, k) == p.value(j, k));
    CHECK(refine_brownian(p, 2).steps() == 64);
    CHECK(refine_brownian(refine_brownian(p)) == refine_brownian(p, 2));
    CHECK(refine_brownian(p) == r);
}

TEST_CASE("bridge midpoints have variance dt/4") {
    std::vector<double> dev;
    for (int i = 0; i < 10000; ++i) {
        const auto p = sample_brownian(1, 1.0, 1, derive_seed(55, static_cast<std::uint64_t>(i)));
        const auto r = refine_brownian(p);
        dev.push_back(r.value(1, 0) - 0.5 * (p.value(0, 0) + p.value(1, 0)));
    }
    const auto v = second_moment(dev);
    CHECK(std::abs(v.mean - 0.25) < 5.0 * v.std_error);
}

TEST_CASE("zero fields leave points fixed") {
    const SdeSystem sys(TimeVectorField::zero(2), {TimeVectorField::zero(2)});
    const auto tr = integrate_flow(sys, Point{0.3, -0.1}, sample_brownian(1, 1.0, 50, 3));
    for (std::size_t j = 0; j < tr.positions.size(); ++j) {
        CHECK(tr.positions[j] == Point{0.3, -0.1});
        CHECK(tr.jacobians[j] == Mat::identity(2));
    }
}

TEST_CASE("linear drift flow is e^t x") {
    const auto tr = integrate_flow(linear_drift_system(), Point{1.0}, sample_brownian(0, 1.0, 1000, 0));
    CHECK(tr.jacobians.front() == Mat::identity(1));
    CHECK(tr.positions.back()[0] == Approx(std::exp(1.0)).margin(1e-5));
    CHECK(tr.jacobians.back()(0, 0) == Approx(std::exp(1.0)).margin(1e-5));
}

TEST_CASE("constant additive noise is integrated exactly") {
    const double c = 0.7;
    const SdeSystem sys(TimeVectorField::zero(1), {corpus::make_field({{"name", "r1.constant"}, {"c", c}}, 1, "x")});
    const auto path = sample_brownian(1, 1.0, 200, 8);
    const auto tr = integrate_flow(sys, Point{0.25}, path);
    for (int j = 0; j <= path.steps(); ++j)
        CHECK(tr.positions[static_cast<std::size_t>(j)][0] == Approx(0.25 + c * path.value(j, 0)).margin(1e-14));
}

TEST_CASE("ensembles match single trajectories") {
    const SdeSystem sys = torus_system();
    const auto path = sample_brownian(2, 1.0, 128, 21);
    const std::vector<Point> pts{Point{0.1, 0.2}, Point{0.1, 0.2}, Point{2.0, 1.0}};
    const auto ens = integrate_ensemble(sys, pts, path);
    REQUIRE(ens.size() == 3);
    const auto single = integrate_flow(sys, pts[2], path);
    CHECK(ens[2].positions == single.positions);
    CHECK(ens[2].jacobians == single.jacobians);
    CHECK(ens[0].positions == ens[1].positions);
    CHECK(ens[0].jacobians == ens[1].jacobians);
    CHECK_THROWS_AS(integrate_ensemble(sys, std::vector<Point>{}, path), ArgumentError);
}

TEST_CASE("nearby points separate by a factor e under the linear flow") {
    const std::vector<Point> pts{Point{0.5}, Point{0.5 + 1e-3}};
    const auto ens = integrate_ensemble(linear_drift_system(), pts, sample_brownian(0, 1.0, 1000, 0));
    const double gap = ens[1].positions.back()[0] - ens[0].positions.back()[0];
    CHECK(gap / 1e-3 == Approx(std::exp(1.0)).margin(1e-5));
}

TEST_CASE("Jacobians match finite differences of the flow map") {
    const SdeSystem sys = torus_system();
    const auto path = sample_brownian(2, 1.0, 512, 44);
    const Point x0{0.9, 2.1};
    const auto tr = integrate_flow(sys, x0, path);
    const double h = 1e-5;
    for (int j = 0; j < 2; ++j) {
        Point xp = x0, xm = x0;
        xp[j] += h;
        xm[j] -= h;
        const auto a = integrate_flow(sys, xp, path), b = integrate_flow(sys, xm, path);
        for (std::size_t s : {std::size_t{128}, std::size_t{512}}) {
            const Vec fd = (a.positions[s] - b.positions[s]) * (1.0 / (2.0 * h));
            const Vec col = tr.jacobians[s].column(j);
            CHECK(max_abs(fd - col) <= 1e-3 * std::max(1.0, max_abs(col)));
        }
    }
}

TEST_CASE("divergence-free systems give det J close to 1 with C stabilising") {
    const SdeSystem sys = torus_system();
    std::vector<double> cs;
    for (int level = 0; level < 3; ++level) {
        const auto path = refine_brownian(sample_brownian(2, 1.0, 256, 61), level);
        double worst = 0.0;
        for (const auto& x0 : torus::grid(3)) {
            const auto tr = integrate_flow(sys, x0, path);
            for (const auto& J : tr.jacobians) {
                REQUIRE(det(J) > 0.0);
                worst = std::max(worst, std::abs(det(J) - 1.0));
            }
        }
        cs.push_back(worst / path.dt());
    }
    // C is bounded: it does not grow under refinement
    CHECK(cs[1] <= 2.0 * cs[0]);
    CHECK(cs[2] <= 2.0 * cs[1]);
}

TEST_CASE("strong order is about 1 for commutative noise") {
    // dx = a x o dB has the exact solution x0 exp(a B_t)
    const double a = 0.8;
    const SdeSystem sys(TimeVectorField::zero(1), {corpus::make_field({{"name", "r1.linear_drift"}, {"a", a}}, 1, "x")});
    std::vector<std::vector<double>> errs(5);
    for (int p = 0; p < 32; ++p) {
        const auto base = sample_brownian(1, 1.0, 16, derive_seed(808, static_cast<std::uint64_t>(p)));
        for (int level = 0; level < 5; ++level) {
            const auto path = refine_brownian(base, level);
            const double exact = std::exp(a * path.value(path.steps(), 0));
            errs[static_cast<std::size_t>(level)].push_back(std::abs(integrate_flow(sys, Point{1.0}, path).positions.back()[0] - exact));
        }
    }
    std::vector<double> med;
    for (auto& e : errs) {
        std::sort(e.begin(), e.end());
        med.push_back(0.5 * (e[15] + e[16]));
    }
    const double order = slope(med);
    INFO("strong order " << order);
    CHECK(order >= 0.9);
    CHECK(order <= 1.1);
}

TEST_CASE("self-convergence against a two-level finer reference") {
    // non-commuting noise: the strong order is exactly 1/2, so the estimate
    // straddles it; batches give the sampling error of the estimate
    const SdeSystem sys = torus_system();
    std::vector<double> orders;
    for (int batch = 0; batch < 8; ++batch) {
        std::vector<double> ms(5, 0.0);
        for (int p = 0; p < 32; ++p) {
            const auto base = sample_brownian(2, 1.0, 16, derive_seed(909, static_cast<std::uint64_t>(32 * batch + p)));
            for (int level = 0; level < 5; ++level) {
                const auto coarse = integrate_flow(sys, Point{1.0, 0.5}, refine_brownian(base, level));
                const auto fine = integrate_flow(sys, Point{1.0, 0.5}, refine_brownian(base, level + 2));
                const double d = max_abs(coarse.positions.back() - fine.positions.back());
                ms[static_cast<std::size_t>(level)] += d * d / 32.0;
            }
        }
        for (double& m : ms) m = std::sqrt(m);
        orders.push_back(slope(ms));
    }
    const auto s = sample_stats(orders);
    INFO("order " << s.mean << " +- " << s.std_error);
    CHECK(s.mean + 3.0 * s.std_error >= 0.5);
    CHECK(s.mean <= 0.8);
}

TEST_CASE("blow-up reports the last valid time") {
    // dx = x^2 dt from x0 = 1 explodes at t = 1
    const SdeSystem sys(numeric_field(1, [](const Point& x) { return Vec{x[0] * x[0]}; }), {});
    try {
        (void)integrate_flow(sys, Point{1.0}, sample_brownian(0, 2.0, 400, 0));
        FAIL("expected a blow-up");
    } catch (const BlowUpError& e) {
        CHECK(e.last_valid_time() > 0.5);
        CHECK(e.last_valid_time() < 2.0);
    }
    try {
        const std::vector<Point> pts{Point{0.0}, Point{1.0}};
        (void)integrate_ensemble(sys, pts, sample_brownian(0, 2.0, 400, 0));
        FAIL("expected a blow-up");
    } catch (const BlowUpError& e) {
        CHECK(e.node() == 1);
    }
}

TEST_CASE("flows are identical regardless of worker count") {
    const SdeSystem sys = torus_system();
    const auto pts = torus::grid(4);
    auto run = [&](int workers) {
        std::vector<FlowTrajectory> out(pts.size());
        parallel_for(pts.size(), workers, [&](std::size_t i) { out[i] = integrate_flow(sys, pts[i], sample_brownian(2, 1.0, 64, derive_seed(3, i))); });
        return out;
    };
    const auto a = run(1), b = run(4);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(a[i].positions == b[i].positions);
        CHECK(a[i].jacobians == b[i].jacobians);
    }
}
