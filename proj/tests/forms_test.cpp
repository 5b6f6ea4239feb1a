#include "helpers.hpp"

#include <catch_amalgamated.hpp>

using namespace stoflow;
using namespace testing_support;
using Catch::Approx;

namespace {

TimeForm dx(int n, int i) {
    std::vector<ScalarField> c(static_cast<std::size_t>(n), ScalarField::zero());
    c[static_cast<std::size_t>(i)] = ScalarField::constant(1.0);
    return TimeForm(n, 1, std::move(c));
}

TimeVectorField constant_field(Vec v) {
    const int n = v.size();
    return TimeVectorField(
        n, [v](double, const Point&) { return v; }, [n](double, const Point&) { return Mat(n, n); });
}

double max_coefficient(const TimeForm& f, const std::vector<Point>& pts) {
    double m = 0.0;
    for (const auto& x : pts)
        for (int c = 0; c < static_cast<int>(f.coefficients().size()); ++c) m = std::max(m, std::abs(f.coefficient(0.0, x, c)));
    return m;
}

// a generic non-polynomial 2-form on R^3 and 1-form on R^2 for property checks
TimeForm wavy_two_form() {
    return TimeForm(3, 2,
                    {numeric([](const Point& x) { return std::sin(x[0] * x[1]) + x[2]; }),
                     numeric([](const Point& x) { return std::cos(x[2]) * x[0]; }),
                     numeric([](const Point& x) { return std::exp(0.3 * x[1]) - x[0] * x[2]; })});
}

TimeForm wavy_one_form() {
    return one_form(2, {numeric([](const Point& x) { return std::sin(x[0]) * x[1]; }),
                        numeric([](const Point& x) { return std::cos(x[0] + 2.0 * x[1]); })});
}

TimeVectorField swirl() {
    return numeric_field(2, [](const Point& x) { return Vec{std::sin(x[1]) + 0.5 * x[0], x[0] * x[0] - std::cos(x[1])}; });
}

} // namespace

TEST_CASE("multi-indices are increasing with C(n,p) entries") {
    for (int n = 1; n <= 3; ++n)
        for (int p = 0; p <= n; ++p) {
            const auto idx = multi_indices(n, p);
            REQUIRE(static_cast<int>(idx.size()) == binomial(n, p));
            for (const auto& I : idx)
                for (int k = 1; k < p; ++k) REQUIRE(I[k - 1] < I[k]);
        }
}

TEST_CASE("evaluate_form on coordinate forms") {
    CHECK(evaluate_form(dx(2, 0), 0.0, Point{0.3, 0.4}, {Vec{1.0, 0.0}}) == 1.0);
    const TimeForm area = TimeForm::top(2, ScalarField::constant(1.0));
    CHECK(evaluate_form(area, 0.0, Point{0.0, 0.0}, {Vec{1.0, 0.0}, Vec{0.0, 1.0}}) == 1.0);
    CHECK(evaluate_form(area, 0.0, Point{0.0, 0.0}, {Vec{1.0, 1.0}, Vec{1.0, 1.0}}) == 0.0);
}

TEST_CASE("evaluate_form rejects bad arguments") {
    const TimeForm area = TimeForm::top(2, ScalarField::constant(1.0));
    CHECK_THROWS_AS(evaluate_form(area, 0.0, Point{0.0, 0.0}, {Vec{1.0, 0.0}}), ArgumentError);
    CHECK_THROWS_AS(evaluate_form(area, 0.0, Point{0.0, 0.0}, {Vec{1.0, 0.0, 0.0}, Vec{0.0, 1.0, 0.0}}), ArgumentError);
    CHECK_THROWS_AS(evaluate_form(area, 0.0, Point{0.0, 0.0, 0.0}, {Vec{1.0, 0.0}, Vec{0.0, 1.0}}), ArgumentError);
}

TEST_CASE("evaluate_form is alternating and multilinear") {
    const TimeForm theta = wavy_two_form();
    const auto pts = sample_points(3, 16);
    const auto vs = sample_vectors(3, 48);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec& a = vs[3 * i];
        const Vec& b = vs[3 * i + 1];
        const Vec& c = vs[3 * i + 2];
        const double ab = evaluate_form(theta, 0.0, pts[i], {a, b});
        CHECK(evaluate_form(theta, 0.0, pts[i], {b, a}) == -ab);
        CHECK(evaluate_form(theta, 0.0, pts[i], {a, a}) == 0.0);
        const double lin = evaluate_form(theta, 0.0, pts[i], {a + 2.5 * c, b});
        CHECK(lin == Approx(ab + 2.5 * evaluate_form(theta, 0.0, pts[i], {c, b})).margin(1e-12));
    }
}

TEST_CASE("exterior derivative examples") {
    // x1 dx2 -> dx1 ^ dx2
    const TimeForm theta = one_form(2, {ScalarField::zero(), numeric([](const Point& x) { return x[0]; })});
    const TimeForm d = exterior_derivative(theta);
    REQUIRE(d.degree() == 2);
    for (const auto& x : sample_points(2, 8))
        CHECK(evaluate_form(d, 0.0, x, {Vec{1.0, 0.0}, Vec{0.0, 1.0}}) == Approx(1.0).margin(1e-9));

    const TimeForm flat = one_form(2, {ScalarField::constant(2.0), ScalarField::constant(-1.0)});
    CHECK(max_coefficient(exterior_derivative(flat), sample_points(2, 8)) == 0.0);

    const TimeForm f = TimeForm::scalar(1, numeric([](const Point& x) { return x[0] * x[0]; }));
    CHECK(evaluate_form(exterior_derivative(f), 0.0, Point{3.0}, {Vec{1.0}}) == Approx(6.0).margin(1e-6));

    CHECK_THROWS_AS(exterior_derivative(TimeForm::top(2, ScalarField::constant(1.0))), DegreeError);
}

TEST_CASE("d of d vanishes") {
    const auto pts = sample_points(3, 32);
    const TimeForm f = TimeForm::scalar(3, numeric([](const Point& x) { return std::sin(x[0]) * std::exp(x[1]) + x[2] * x[0]; }));
    CHECK(max_coefficient(exterior_derivative(exterior_derivative(f)), pts) < 1e-6);
    const TimeForm a = one_form(3, {numeric([](const Point& x) { return x[1] * x[2]; }),
                                    numeric([](const Point& x) { return std::cos(x[0] * x[2]); }),
                                    numeric([](const Point& x) { return x[0] * x[0] * x[1]; })});
    CHECK(max_coefficient(exterior_derivative(exterior_derivative(a)), pts) < 1e-6);
    CHECK_THROWS_AS(exterior_derivative(exterior_derivative(wavy_one_form())), DegreeError);
}

TEST_CASE("interior product examples") {
    const TimeForm area = TimeForm::top(2, ScalarField::constant(1.0));
    const TimeForm i = interior_product(constant_field(Vec{1.0, 0.0}), area);
    REQUIRE(i.degree() == 1);
    CHECK(i.coefficient(0.0, Point{0.2, 0.1}, 0) == 0.0);
    CHECK(i.coefficient(0.0, Point{0.2, 0.1}, 1) == 1.0);

    CHECK(interior_product(TimeVectorField::zero(2), area).is_zero());

    const TimeForm p = interior_product(constant_field(Vec{0.7, -2.0}), dx(2, 0));
    CHECK(p.degree() == 0);
    CHECK(p.coefficient(0.0, Point{1.0, 1.0}, 0) == 0.7);

    CHECK_THROWS_AS(interior_product(constant_field(Vec{1.0}), TimeForm::scalar(1, ScalarField::constant(1.0))), DegreeError);
}

TEST_CASE("interior product agrees with inserting the field first") {
    const TimeForm theta = wavy_two_form();
    const auto X = numeric_field(3, [](const Point& x) { return Vec{x[1], std::sin(x[0]), 1.0 + x[2] * x[2]}; });
    const TimeForm ix = interior_product(X, theta);
    const auto vs = sample_vectors(3, 8);
    const auto pts = sample_points(3, 8);
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK(evaluate_form(ix, 0.0, pts[i], {vs[i]}) ==
              Approx(evaluate_form(theta, 0.0, pts[i], {X.value(0.0, pts[i]), vs[i]})).margin(1e-12));
}

TEST_CASE("Lie derivative examples") {
    const auto pts = sample_points(1, 16);
    // X = d1, theta = x dx -> dx
    const TimeForm xdx = one_form(1, {numeric([](const Point& x) { return x[0]; })});
    const TimeForm l = lie_derivative(constant_field(Vec{1.0}), xdx);
    for (const auto& x : pts) CHECK(l.coefficient(0.0, x, 0) == Approx(1.0).margin(1e-6));

    const TimeForm flat = one_form(2, {ScalarField::constant(3.0), ScalarField::constant(1.0)});
    CHECK(max_coefficient(lie_derivative(constant_field(Vec{0.5, -1.0}), flat), sample_points(2, 8)) == 0.0);
}

TEST_CASE("Lie derivative of a density equals the divergence density on the torus") {
    const TimeForm mu = torus::area_form();
    const ScalarField f = numeric([](const Point& x) { return std::cos(x[0]); });
    for (auto k : {torus::FourierMode(1, 0), torus::FourierMode(2, 3), torus::FourierMode(-1, 2)}) {
        const TimeVectorField A = torus::fourier_field_A(k);
        const TimeForm lhs = lie_derivative(A, density_form(f, mu));
        const ScalarField rhs = divergence_field(mu, scale(f, A));
        double worst = 0.0;
        for (const auto& x : torus::grid(16)) worst = std::max(worst, std::abs(lhs.coefficient(0.0, x, 0) - rhs.value(0.0, x)));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("Cartan formula matches symbolic oracles") {
    // X = (x2, -x1 x2), theta = x1^2 dx2 on R^2:
    // L_X theta = d(i_X theta) + i_X d theta, with i_X theta = -x1^3 x2 ... computed by hand below
    const auto X = numeric_field(2, [](const Point& x) { return Vec{x[1], -x[0] * x[1]}; });
    const TimeForm theta = one_form(2, {ScalarField::zero(), numeric([](const Point& x) { return x[0] * x[0]; })});
    // (L_X theta)_j = X^i d_i theta_j + theta_i d_j X^i
    // theta_1 = 0, theta_2 = x1^2
    // (L)_1 = x2 * 0 + theta_2 d_1 X^2 = x1^2 * (-x2)
    // (L)_2 = X^1 d_1 theta_2 + theta_2 d_2 X^2 = x2 * 2 x1 + x1^2 * (-x1)
    const TimeForm l = lie_derivative(X, theta);
    for (const auto& x : sample_points(2, 32)) {
        CHECK(l.coefficient(0.0, x, 0) == Approx(-x[0] * x[0] * x[1]).margin(1e-6));
        CHECK(l.coefficient(0.0, x, 1) == Approx(2.0 * x[0] * x[1] - x[0] * x[0] * x[0]).margin(1e-6));
    }
}

TEST_CASE("Lie derivative squared examples") {
    const auto pts = sample_points(1, 16);
    const TimeForm sq = one_form(1, {numeric([](const Point& x) { return x[0] * x[0]; })});
    const TimeForm l2 = lie_derivative_squared(constant_field(Vec{1.0}), sq);
    for (const auto& x : pts) CHECK(l2.coefficient(0.0, x, 0) == Approx(2.0).margin(1e-5));

    const TimeForm flat = one_form(2, {ScalarField::constant(3.0), ScalarField::constant(1.0)});
    CHECK(max_coefficient(lie_derivative_squared(constant_field(Vec{0.5, -1.0}), flat), sample_points(2, 8)) == 0.0);

    const auto lin = numeric_field(1, [](const Point& x) { return Vec{x[0]}; });
    const TimeForm l1 = lie_derivative(lin, dx(1, 0));
    const TimeForm l2b = lie_derivative_squared(lin, dx(1, 0));
    for (const auto& x : pts) {
        CHECK(l1.coefficient(0.0, x, 0) == Approx(1.0).margin(1e-6));
        CHECK(l2b.coefficient(0.0, x, 0) == Approx(1.0).margin(1e-5));
    }
}

TEST_CASE("nested numeric Lie derivatives stay accurate for the torus fields") {
    // L_A^2 of sin(theta1) dtheta1 with A = A_(0,1) = cos(theta2) d1:
    // L_A theta = d(cos(th2) sin(th1)) ; L_A^2 theta = d(cos(th2) * d1(cos(th2) sin(th1))) = d(cos^2(th2) cos(th1))
    const TimeForm theta = one_form(2, {numeric([](const Point& x) { return std::sin(x[0]); }), ScalarField::zero()});
    const TimeVectorField A = numeric_field(2, [](const Point& x) { return Vec{std::cos(x[1]), 0.0}; });
    const TimeForm l2 = lie_derivative_squared(A, theta);
    for (const auto& x : torus::grid(8)) {
        const double c = std::cos(x[1]);
        CHECK(l2.coefficient(0.0, x, 0) == Approx(-c * c * std::sin(x[0])).margin(1e-6));
        CHECK(l2.coefficient(0.0, x, 1) == Approx(-2.0 * c * std::sin(x[1]) * std::cos(x[0])).margin(1e-6));
    }
}

TEST_CASE("divergence examples") {
    const TimeForm mu1 = TimeForm::top(1, ScalarField::constant(1.0));
    const auto lin = numeric_field(1, [](const Point& x) { return Vec{x[0]}; });
    CHECK(divergence(mu1, lin, 0.0, Point{0.37}) == Approx(1.0).margin(1e-8));
    CHECK(divergence(mu1, TimeVectorField::zero(1), 0.0, Point{0.37}) == 0.0);

    const TimeForm mu = torus::area_form();
    for (int k1 = -2; k1 <= 2; ++k1)
        for (int k2 = -2; k2 <= 2; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            const torus::FourierMode k(k1, k2);
            for (const auto& x : torus::grid(8)) {
                CHECK(std::abs(divergence(mu, torus::fourier_field_A(k), 0.0, x)) < 1e-10);
                CHECK(std::abs(divergence(mu, torus::fourier_field_B(k), 0.0, x)) < 1e-10);
            }
        }
}

TEST_CASE("divergence requires a positive volume coefficient") {
    const TimeForm bad = TimeForm::top(1, numeric([](const Point& x) { return x[0]; }));
    CHECK_THROWS_AS(divergence(bad, TimeVectorField::zero(1), 0.0, Point{-0.5}), InvariantError);
    CHECK_THROWS_AS(divergence(TimeForm::top(1, ScalarField::zero()), TimeVectorField::zero(1), 0.0, Point{0.5}), InvariantError);
}

TEST_CASE("divergence with a non-constant volume form") {
    // mu = (2 + x1) dx1 ^ dx2, X = x2 d1: div = X(log m) + div X = x2 / (2 + x1)
    const TimeForm mu = TimeForm::top(2, numeric([](const Point& x) { return 2.0 + x[0]; }));
    const auto X = numeric_field(2, [](const Point& x) { return Vec{x[1], 0.0}; });
    for (const auto& x : sample_points(2, 16)) CHECK(divergence(mu, X, 0.0, x) == Approx(x[1] / (2.0 + x[0])).margin(1e-7));
}

TEST_CASE("divergence product rule") {
    const TimeForm mu = TimeForm::top(2, ScalarField::constant(1.0));
    const ScalarField f = numeric([](const Point& x) { return std::exp(0.5 * x[0]) * std::cos(x[1]); });
    const TimeVectorField X = swirl();
    const ScalarField lhs = divergence_field(mu, scale(f, X));
    const ScalarField divX = divergence_field(mu, X);
    const ScalarField Xf = directional_derivative(X, f);
    for (const auto& x : sample_points(2, 32))
        CHECK(lhs.value(0.0, x) == Approx(f.value(0.0, x) * divX.value(0.0, x) + Xf.value(0.0, x)).margin(1e-6));
}

TEST_CASE("pullback examples") {
    const TimeForm theta = wavy_one_form();
    const Point x{0.4, -0.2};
    const Vec v{0.3, 1.1};
    const Vec vs[] = {v};
    CHECK(pullback_value(x, Mat::identity(2), theta, 0.0, vs) == evaluate_form(theta, 0.0, x, {v}));

    Mat two(1, 1);
    two(0, 0) = 2.0;
    const Vec one[] = {Vec{1.0}};
    CHECK(pullback_value(Point{0.5}, two, dx(1, 0), 0.0, one) == 2.0);

    const TimeForm area = TimeForm::top(2, ScalarField::constant(1.0));
    const Vec basis[] = {Vec{1.0, 0.0}, Vec{0.0, 1.0}};
    for (double a : {0.1, 1.0, 2.5, -0.7}) {
        Mat R(2, 2);
        R(0, 0) = std::cos(a), R(0, 1) = -std::sin(a), R(1, 0) = std::sin(a), R(1, 1) = std::cos(a);
        CHECK(pullback_value(Point{0.0, 0.0}, R, area, 0.0, basis) == Approx(1.0).margin(1e-15));
    }
    CHECK_THROWS_AS(pullback_value(Point{0.0}, Mat::identity(2), area, 0.0, basis), ArgumentError);
}

TEST_CASE("analytic and numeric Jacobians agree to second order") {
    const auto k = torus::FourierMode(2, -1);
    const TimeVectorField A = torus::fourier_field_A(k);
    const TimeVectorField An = numeric_field(2, [A](const Point& x) { return A.value(0.0, x); });
    for (const auto& x : torus::grid(6)) {
        const Mat a = A.jacobian(0.0, x), b = An.jacobian(0.0, x);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(a(i, j) == Approx(b(i, j)).margin(1e-9));
    }
}

TEST_CASE("non-finite coefficients surface as numeric errors") {
    const TimeForm bad = one_form(1, {numeric([](const Point& x) { return 1.0 / x[0]; })});
    const Vec one[] = {Vec{1.0}};
    CHECK_THROWS_AS(evaluate_form(bad, 0.0, Point{0.0}, one), NumericError);
}
