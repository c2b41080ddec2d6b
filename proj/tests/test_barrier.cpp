#include <doctest.h>

#include <cmath>

#include "parasafe/barrier.hpp"

using namespace parasafe;

namespace {

Eigen::MatrixXd demo_A() {
    Eigen::MatrixXd A(2, 2);
    A << 0, 1, 2, -1;
    return A;
}

Eigen::VectorXd vec2(double a, double b) { return (Eigen::VectorXd(2) << a, b).finished(); }

}  // namespace

TEST_SUITE("barrier") {

TEST_CASE("sigma bump value, support and smoothness") {
    // h0 = -10, beta = 1, t_a = 1: sigma(0) = e * 11 * e^{-1} = 11 exactly.
    SigmaBump sig(-10.0, 1.0, 1.0);
    REQUIRE(sig.active());
    CHECK(sig.deriv(0, 0.0) == doctest::Approx(11.0).epsilon(1e-13));

    // t = 0 is interior to the smooth branch: with y = 1/(t - t_a) = -1 the
    // prefactors P_1 = 2y^3, P_2 = -6y^4 + 4y^6, P_3 = 24y^5 - 36y^7 + 8y^9
    // evaluate to -2, -2, 4, and amp * e^{-1} = beta - h0 = 11.
    CHECK(sig.deriv(1, 0.0) == doctest::Approx(-22.0).epsilon(1e-13));
    CHECK(sig.deriv(2, 0.0) == doctest::Approx(-22.0).epsilon(1e-13));
    CHECK(sig.deriv(3, 0.0) == doctest::Approx(44.0).epsilon(1e-13));

    // Flat at t_a and zero beyond the support.
    for (int m = 1; m <= 4; ++m) {
        CHECK(sig.deriv(m, 1.0) == 0.0);
        CHECK(sig.deriv(m, 1.5) == 0.0);
    }
    CHECK(sig.deriv(0, 1.0) == 0.0);
    CHECK(sig.deriv(0, 0.999) < 1e-12);
    CHECK(sig.deriv(0, 0.5) > 0.0);

    // Closed-form derivatives against central differences.
    const double dh = 1e-6;
    for (double t : {0.2, 0.5, 0.8}) {
        const double fd1 = (sig.deriv(0, t + dh) - sig.deriv(0, t - dh)) / (2 * dh);
        CHECK(sig.deriv(1, t) == doctest::Approx(fd1).epsilon(1e-6));
        const double fd2 = (sig.deriv(1, t + dh) - sig.deriv(1, t - dh)) / (2 * dh);
        CHECK(sig.deriv(2, t) == doctest::Approx(fd2).epsilon(1e-5));
    }

    SigmaBump off(0.5, 1.0, 1.0);  // safe start: no bump
    CHECK_FALSE(off.active());
    CHECK(off.deriv(0, 0.1) == 0.0);

    CHECK_THROWS_AS(SigmaBump(-1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("structural transform against the hand-computed pair") {
    const StructuralTransform tr = build_structural_transform(demo_A(), 5.0);
    CHECK((tr.Tz - Eigen::MatrixXd::Identity(2, 2)).norm() == doctest::Approx(0.0));
    CHECK(tr.K(0) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(tr.K(1) == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("transform identity Tz A = Az Tz + B K^T") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i + 1 < 4; ++i) A(i, i + 1) = 1;
    A.row(3) << -0.3, 1.7, 0.2, -2.5;
    const double b = 2.25;
    const StructuralTransform tr = build_structural_transform(A, b);

    Eigen::VectorXd B = Eigen::VectorXd::Zero(4);
    B(3) = b;
    const Eigen::MatrixXd lhs = tr.Tz * A;
    const Eigen::MatrixXd rhs = tr.Az * tr.Tz + B * tr.K.transpose();
    CHECK((lhs - rhs).norm() < 1e-12);
    CHECK((B * tr.K.transpose() - tr.BKt).norm() < 1e-12);

    // Unit lower-triangular Tz.
    for (int i = 0; i < 4; ++i) {
        CHECK(tr.Tz(i, i) == doctest::Approx(1.0));
        for (int j = i + 1; j < 4; ++j) CHECK(tr.Tz(i, j) == 0.0);
    }
}

TEST_CASE("chain boundary expression f on the worked example") {
    // h = y1, kappa = (23, 3), Z = (10, 0), b = 5:
    // q = (kappa_2 kappa_1, kappa_2 + kappa_1) = (69, 26), f = 690 / 5 = 138.
    const BarrierChain chain(Barrier::affine(), SigmaBump(),
                             (Eigen::VectorXd(2) << 23, 3).finished());
    CHECK(chain.f(vec2(10, 0), 0.0, 5.0) == doctest::Approx(138.0).epsilon(1e-14));
    CHECK(chain.f_state_coeff()(0) == doctest::Approx(69.0));
    CHECK(chain.f_state_coeff()(1) == doctest::Approx(26.0));
    CHECK(chain.f(Eigen::VectorXd::Zero(2), 0.0, 5.0) == doctest::Approx(0.0));

    CHECK(chain.h_i(1, vec2(10, 0), 0.0) == doctest::Approx(10.0));
    CHECK(chain.h_i(2, vec2(10, 0), 0.0) == doctest::Approx(230.0));  // z2 + 23 z1
}

TEST_CASE("chain initial values for the decaying-envelope barrier") {
    // h = 14 e^{-3t} - y1, y1(0) = 18, beta = 4: h(0) = -4, sigma(0) = 8,
    // sigma'(0) = -2(beta - h0)/t_a^3 = -16; with kappa_1 = 23:
    // h2(0) = -y2 - 42 + sigma'(0) + 23*4 = -58 + 92 = 34.
    const Barrier bar = Barrier::exp_envelope(14.0, 3.0);
    const double h0 = bar.value(18.0, 0.0);
    CHECK(h0 == doctest::Approx(-4.0));
    const SigmaBump sig(h0, 1.0, 4.0);
    const BarrierChain chain(bar, sig, (Eigen::VectorXd(2) << 23, 3).finished());
    CHECK(chain.h_i(1, vec2(18, 0), 0.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(chain.h_i(2, vec2(18, 0), 0.0) == doctest::Approx(34.0).epsilon(1e-12));
}

TEST_CASE("chain time parts telescope: psi_{i+1} = psi_i' + kappa_i psi_i") {
    const Barrier bar = Barrier::exp_envelope(14.0, 3.0);
    const SigmaBump sig(-4.0, 1.0, 4.0);
    const Eigen::VectorXd kap = (Eigen::VectorXd(2) << 2.5, 3).finished();
    const BarrierChain chain(bar, sig, kap);

    const double dh = 1e-6;
    for (double t : {0.1, 0.4, 0.9, 1.3}) {
        const double fd =
            (chain.time_part(1, 0, t + dh) - chain.time_part(1, 0, t - dh)) / (2 * dh);
        CHECK(chain.time_part(2, 0, t) ==
              doctest::Approx(fd + kap(0) * chain.time_part(1, 0, t)).epsilon(1e-6));
        // Registered derivative of psi_2 matches differencing psi_2 itself.
        const double fd2 =
            (chain.time_part(2, 0, t + dh) - chain.time_part(2, 0, t - dh)) / (2 * dh);
        CHECK(chain.time_part(2, 1, t) == doctest::Approx(fd2).epsilon(1e-5));
    }
}

TEST_CASE("gain selection thresholds and rejections") {
    const Barrier bar = Barrier::affine();
    const SigmaBump sig;  // inactive

    // Safe start: thresholds at most 0 for Z0 deep inside.
    GainSelection g = select_kappas(bar, sig, vec2(10, 0), 3.0);
    CHECK(g.kappas.size() == 2);
    CHECK(g.kappas(1) == doctest::Approx(3.0));  // kappa_n = c
    for (int i = 0; i + 1 < 2; ++i) CHECK(g.kappas(i) > 0.0);

    // User gains accepted when above thresholds and kappa_n <= c.
    Eigen::VectorXd user = (Eigen::VectorXd(2) << 23, 3).finished();
    CHECK_NOTHROW(select_kappas(bar, sig, vec2(10, 0), 3.0, &user));
    Eigen::VectorXd too_fast = (Eigen::VectorXd(2) << 23, 3.5).finished();
    CHECK_THROWS_AS(select_kappas(bar, sig, vec2(10, 0), 3.0, &too_fast), GainError);

    // Unsafe start without a bump cannot produce h_1(0) > 0.
    CHECK_THROWS_AS(select_kappas(bar, sig, vec2(-10, 0), 3.0), GainError);

    // With the bump the same start is admissible and chain positivity holds.
    const SigmaBump rescue(-10.0, 1.0, 1.0);
    GainSelection gr = select_kappas(bar, rescue, vec2(-10, 0), 3.0);
    const BarrierChain chain(bar, rescue, gr.kappas);
    const Eigen::VectorXd h = chain.eval(vec2(-10, 0), 0.0);
    for (int i = 0; i < h.size(); ++i) CHECK(h(i) > 0.0);
}

TEST_CASE("barrier family guards") {
    CHECK_THROWS_AS(Barrier::custom(0.0, {[](double) { return 0.0; }}), SignError);
    CHECK_THROWS_AS(Barrier::custom(1.0, {}), PartialMissingError);
    const Barrier bar = Barrier::exp_envelope(14.0, 3.0);
    CHECK(bar.theta() == doctest::Approx(-1.0));
    CHECK(bar.partial(1, 0, 5.0, 0.3) == doctest::Approx(-1.0));
    CHECK(bar.partial(0, 1, 5.0, 0.0) == doctest::Approx(-42.0));
    CHECK(bar.partial(1, 1, 5.0, 0.0) == doctest::Approx(0.0));
}

}  // TEST_SUITE
