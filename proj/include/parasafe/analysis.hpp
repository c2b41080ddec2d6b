#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "parasafe/controller.hpp"
#include "parasafe/kernels.hpp"
#include "parasafe/plant.hpp"

namespace parasafe {

// Symmetric P with Ah^T P + P Ah = -Q via the vectorized dense solve.
// SingularError when the Lyapunov operator is not invertible (e.g. a zero
// gain puts an eigenvalue pair on the imaginary axis).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Ah, const Eigen::MatrixXd& Q);

// Weights for V = H'PH + 1/2 int v^2 + a1/2 int v_x^2 + a2/2 delta^2 with
//   a1 > max{3|PB|^2 tb^2/(c lmin(Q)) - eps/c, 0},  a2 > 3|PB|^2 tb^2/(c lmin(Q)),
// b_bar the box upper bound when b is unknown and theta_bar a bound on
// |dh/dy1| along the run.
struct LyapunovWeights {
    double a1 = 0, a2 = 0;
    double floor_a1 = 0, floor_a2 = 0;
    double lambda_min_Q = 0;
};
LyapunovWeights lyapunov_weights(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                                 double b_bar, double theta_bar, double c, double eps);

double lyapunov_value(const Eigen::VectorXd& H, const std::vector<double>& v,
                      const std::vector<double>& v_x, double delta, const Eigen::MatrixXd& P,
                      double a1, double a2);

// V(t) at snapshot times; v = w - delta reconstructed from logged fields and
// the logged boundary-derivative ladder, v_x by one-sided differences.
struct LyapunovSeries {
    std::vector<double> t, V;
    LyapunovWeights weights;
};
LyapunovSeries lyapunov_series(const TrajectoryLog& log, const KernelTables& tables,
                               const Eigen::MatrixXd& P, const LyapunovWeights& w, double M,
                               int theta_sign, int p_order);

// Least-squares slope of log y over t >= t_start (skipping nonpositive y).
struct DecayFit {
    double slope = 0, intercept = 0;
    int points = 0;
};
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y, double t_start);

// Norm history: sum = ||u|| + ||u_x|| + |Y| (per logged sample, full rate)
// and the squared proxy xi.
struct MetricsReport {
    std::vector<double> t, sum, xi;
    double peak = 0;
    double final_ratio = 0;  // sum.back() / peak
    bool monotone_growth_past(double t_from) const;
};
MetricsReport metrics(const TrajectoryLog& log);

struct SafetyReport {
    bool safe_start = true;   // h(y1(0), 0) > 0
    double t_a = 0;
    double min_h_all = std::numeric_limits<double>::infinity();
    double min_h_applicable = std::numeric_limits<double>::infinity();  // t >= 0 or t >= t_a
    double recovery_time = std::numeric_limits<double>::quiet_NaN();    // unsafe start only
    double h_chain_min = std::numeric_limits<double>::infinity();       // over i and t
    bool pass = false;
};
// Safe start: h >= 0 on the whole logged grid. Unsafe start: recovery time =
// first logged t after which h never drops below 0 again; pass requires
// recovery <= t_a.
SafetyReport safety_report(const TrajectoryLog& log, double t_a);

// |w(1,t) - delta(t)| at snapshot times, with the applied-control column used
// as u(1,t) so the Dirichlet lag of the stepping does not pollute the check.
std::vector<double> boundary_identity_gap(const TrajectoryLog& log, const KernelTables& tables,
                                          double M, int theta_sign, int p_order);

}  // namespace parasafe
