#include <doctest.h>

#include <cmath>

#include "parasafe/analysis.hpp"
#include "parasafe/barrier.hpp"

using namespace parasafe;

TEST_SUITE("analysis") {

TEST_CASE("Lyapunov solve satisfies the defining identity") {
    for (auto kap : {std::vector<double>{23, 3}, std::vector<double>{2, 5, 1, 7}}) {
        Eigen::VectorXd k = Eigen::Map<const Eigen::VectorXd>(kap.data(), kap.size());
        const Eigen::MatrixXd Ah = make_Ah(k);
        const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(k.size(), k.size());
        const Eigen::MatrixXd P = solve_lyapunov(Ah, Q);
        CHECK((Ah.transpose() * P + P * Ah + Q).norm() < 1e-11);
        CHECK((P - P.transpose()).norm() < 1e-13);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }

    // Zero gain = eigenvalue on the axis: operator is singular.
    Eigen::VectorXd k0 = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(solve_lyapunov(make_Ah(k0), Eigen::MatrixXd::Identity(1, 1)),
                    SingularError);
    CHECK_THROWS_AS(solve_lyapunov(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 3)),
                    DimensionError);
}

TEST_CASE("weight floors follow the closed form") {
    const Eigen::VectorXd k = (Eigen::VectorXd(2) << 23, 3).finished();
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd P = solve_lyapunov(make_Ah(k), Q);
    const double b_bar = 7.0, theta_bar = 1.0, c = 3.0, eps = 1.0;
    const LyapunovWeights w = lyapunov_weights(P, Q, b_bar, theta_bar, c, eps);

    Eigen::VectorXd B = Eigen::VectorXd::Zero(2);
    B(1) = b_bar;
    const double core = 3.0 * (P * B).squaredNorm() * theta_bar * theta_bar / (c * 1.0);
    CHECK(w.floor_a2 == doctest::Approx(core).epsilon(1e-12));
    CHECK(w.floor_a1 == doctest::Approx(std::max(core - eps / c, 0.0)).epsilon(1e-12));
    CHECK(w.a1 > w.floor_a1);
    CHECK(w.a2 > w.floor_a2);
    CHECK(w.lambda_min_Q == doctest::Approx(1.0));
}

TEST_CASE("quadratic functional evaluation") {
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(2, 2) * 2.0;
    const Eigen::VectorXd H = (Eigen::VectorXd(2) << 1, -1).finished();
    std::vector<double> v(11, 1.0);     // int v^2 = 1
    std::vector<double> vx(10, 1.0);    // int v_x^2 = 1
    // V = H^T P H + 1/2 + a1/2 + a2/2 * delta^2 = 4 + 0.5 + 3.5 + 3 = 11
    CHECK(lyapunov_value(H, v, vx, 2.0, P, 7.0, 1.5) == doctest::Approx(11.0));
}

TEST_CASE("decay fit recovers an exact exponential") {
    std::vector<double> t, y;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.05 * k);
        y.push_back(5.0 * std::exp(-2.0 * 0.05 * k));
    }
    const DecayFit f = decay_fit(t, y, 1.0);
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(f.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-9));
    CHECK(f.points == 81);

    // Nonpositive samples are skipped, not logged.
    y[90] = 0.0;
    const DecayFit g = decay_fit(t, y, 1.0);
    CHECK(g.points == 80);
    CHECK(g.slope == doctest::Approx(-2.0).epsilon(1e-8));
}

TEST_CASE("safety accounting on synthetic logs") {
    TrajectoryLog log;
    const int n = 1000;
    for (int k = 0; k <= n; ++k) {
        const double t = k * 1e-3;
        log.t.push_back(t);
        log.h.push_back(t - 0.5);  // crosses zero at 0.5
        log.h_chain.push_back((Eigen::VectorXd(1) << t - 0.4).finished());
    }
    const SafetyReport r = safety_report(log, 1.0);
    CHECK_FALSE(r.safe_start);
    CHECK(r.recovery_time == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.min_h_all == doctest::Approx(-0.5));
    CHECK(r.min_h_applicable == doctest::Approx(0.5));  // t >= t_a = 1
    CHECK(r.pass);

    // Never recovering: h dips at the end.
    log.h.back() = -1.0;
    const SafetyReport rb = safety_report(log, 1.0);
    CHECK_FALSE(rb.pass);

    // Safe start passes iff h never dips.
    TrajectoryLog ok;
    for (int k = 0; k <= 10; ++k) {
        ok.t.push_back(k * 0.1);
        ok.h.push_back(1.0);
        ok.h_chain.push_back((Eigen::VectorXd(1) << 1.0).finished());
    }
    CHECK(safety_report(ok, 1.0).pass);
    ok.h[5] = -0.1;
    CHECK(safety_report(ok, 1.0).safe_start);  // the start itself was fine
    CHECK_FALSE(safety_report(ok, 1.0).pass);
}

TEST_CASE("norm metrics and growth detection") {
    TrajectoryLog log;
    for (int k = 0; k <= 30; ++k) {
        const double t = k * 0.1;
        log.t.push_back(t);
        log.norm_u.push_back(std::exp(t));
        log.norm_ux.push_back(0.0);
        log.Y.push_back(Eigen::VectorXd::Zero(1));
    }
    const MetricsReport m = metrics(log);
    CHECK(m.peak == doctest::Approx(std::exp(3.0)));
    CHECK(m.final_ratio == doctest::Approx(1.0));
    CHECK(m.monotone_growth_past(1.0));

    log.norm_u[25] = 0.1;  // a dip after t = 1
    CHECK_FALSE(metrics(log).monotone_growth_past(1.0));
}

}  // TEST_SUITE
