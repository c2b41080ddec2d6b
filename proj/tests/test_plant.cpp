#include <doctest.h>

#include <cmath>

#include "parasafe/plant.hpp"

using namespace parasafe;

namespace {

PlantParams demo_plant() {
    PlantParams p;
    p.A.resize(2, 2);
    p.A << 0, 1, 2, -1;
    p.b = 5;
    p.eps = 1;
    p.lambda = 10;
    p.box = {8, 12, 3, 7};
    return p;
}

}  // namespace

TEST_SUITE("plant") {

TEST_CASE("parameter validation") {
    PlantParams p = demo_plant();
    CHECK_NOTHROW(p.validate());

    PlantParams bad = p;
    bad.A(0, 1) = 2;  // superdiagonal must be 1
    CHECK_THROWS_AS(bad.validate(), StructureError);

    bad = p;
    bad.b = -1;
    CHECK_THROWS_AS(bad.validate(), SignError);

    bad = p;
    bad.lambda = 20;  // outside [8, 12]
    CHECK_THROWS_AS(bad.validate(), BoxError);

    bad = p;
    bad.box.b_min = -1;
    CHECK_THROWS_AS(bad.validate(), SignError);
}

TEST_CASE("grid stability gate") {
    Grid g{20, 1e-3, 1.0};
    CHECK_NOTHROW(g.validate(1.0));  // ratio 0.4
    g.dt = 2e-3;                     // ratio 0.8
    CHECK_THROWS_AS(g.validate(1.0), StabilityError);
    g = {1, 1e-3, 1.0};
    CHECK_THROWS_AS(g.validate(1.0), DimensionError);
}

TEST_CASE("pure diffusion eigenmode decays at the exact rate") {
    // lambda = 0, U = 0, u0 = cos(pi x / 2) is an exact eigenmode:
    // u(x,t) = exp(-(pi/2)^2 t) cos(pi x / 2).
    PlantParams p;
    p.A.resize(1, 1);
    p.A << 0;
    p.b = 1;
    p.eps = 1;
    p.lambda = 0;
    p.box = {-1, 1, 0.5, 2};

    auto run = [&](int nx, double dt) {
        Grid g{nx, dt, 0.5};
        SimState s = init_state([](double x) { return std::cos(0.5 * M_PI * x); },
                                Eigen::VectorXd::Zero(1), g);
        TrajectoryLog log = run_closed_loop(
            s, p, g, [](double, const SimState&) { return 0.0; }, {}, g.steps());
        double err = 0;
        const std::vector<double>& u = log.snap_u.back();
        const double t = log.snap_t.back();
        for (int i = 0; i <= nx; ++i) {
            const double exact =
                std::exp(-0.25 * M_PI * M_PI * t) * std::cos(0.5 * M_PI * i / nx);
            err = std::max(err, std::abs(u[i] - exact));
        }
        return err;
    };

    const double e20 = run(20, 1e-3);
    const double e40 = run(40, 2.5e-4);
    CHECK(e20 < 2e-3);
    CHECK(e40 < e20 / 2.5);  // refining dx and dt together shrinks the error
}

TEST_CASE("log layout: stride, boundary trace, determinism") {
    PlantParams p = demo_plant();
    Grid g{20, 1e-3, 0.1};
    SimState s = init_state([](double x) { return x * x * std::sin(4 * M_PI * x); },
                            (Eigen::VectorXd(2) << 1, 0).finished(), g);

    auto ctl = [](double t, const SimState&) { return 0.7 + 0.1 * t; };
    TrajectoryLog log = run_closed_loop(s, p, g, ctl, {}, 7);

    const int steps = g.steps();
    REQUIRE(log.size() == static_cast<std::size_t>(steps) + 1);
    CHECK(log.t.front() == doctest::Approx(0.0));
    CHECK(log.t.back() == doctest::Approx(g.t_final));

    // The boundary column is the Dirichlet datum itself, right-continuously.
    for (std::size_t k = 0; k < log.size(); ++k)
        CHECK(log.u1[k] == log.U[k]);

    const int expected_snaps = steps / 7 + 1 + (steps % 7 ? 1 : 0);
    CHECK(static_cast<int>(log.snap_t.size()) == expected_snaps);
    for (const auto& snap : log.snap_u) CHECK(snap.size() == 21);

    TrajectoryLog again = run_closed_loop(s, p, g, ctl, {}, 7);
    for (std::size_t k = 0; k < log.size(); ++k) {
        CHECK(log.U[k] == again.U[k]);
        CHECK((log.Y[k] - again.Y[k]).norm() == 0.0);
    }
}

TEST_CASE("divergence raises instead of clamping") {
    PlantParams p = demo_plant();
    Grid g{20, 1e-3, 3.0};
    SimState s = init_state([](double x) { return 1e305 * x * x * std::sin(4 * M_PI * x); },
                            (Eigen::VectorXd(2) << 0, 0).finished(), g);
    CHECK_THROWS_AS(
        run_closed_loop(s, p, g, [](double, const SimState&) { return 0.0; }, {}, 50),
        NonFiniteError);
}

}  // TEST_SUITE
