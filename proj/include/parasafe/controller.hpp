#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "parasafe/barrier.hpp"
#include "parasafe/identifier.hpp"
#include "parasafe/kernels.hpp"
#include "parasafe/plant.hpp"
#include "parasafe/series.hpp"

namespace parasafe {

struct ControllerConfig {
    double c = 3.0;              // target decay rate; kappa_n <= c
    std::vector<double> kappas;  // empty -> auto-selected
    double kappa_margin = 1.0;   // auto-selection headroom above the thresholds
    double M = 0;                // boundary-drive amplitude (validated, not derived)
    bool piecewise_M = false;    // adaptive only: switch amplitude at t_M
    double M_after = 0;          // amplitude for t >= t_M in piecewise mode
    int series_terms = 64;       // J for every j-sum
    int p_order = 10;            // Taylor terms (even powers) of the lateral solution p
    int table_refine = 4;        // kernel solver refinement factor
    bool monitor_tM = true;      // adaptive: run the online t_M monitor
};

// delta(t) = theta_sign * M * exp(-c t); satisfies c delta + delta' = 0.
double delta_eval(double t, double M, double c, int theta_sign);

// Boundary value of the lateral solution, p(0,t) = -f(Z,t)/theta.
double solve_p_boundary(const BarrierChain& chain, const Eigen::VectorXd& Z, double t,
                        double b_est);

// Time derivatives p0^(m)(t), m = 0..order, propagated through the model
// equations with the supplied estimates instead of differentiating signals.
// The transform collapses at x = 0 to u(0,t) + K^T Y = w(0,t) + p(0,t);
// substituting that into Z' = Az Z + B (u(0,t) + K^T Y) closes the trace on
// its own chain:
//   Z^(m+1) = (Az - e_n q^T/theta) Z^(m) - e_n g^(m)(t)/theta
//             (+ b_est e_n w(0,t) at m = 0),
//   p0^(m)  = -(q . Z^(m) + g^(m)(t)) / (theta b_est).
// The trace value w(0,t) and its slope w_t(0,t) = eps w_xx(0,t) - c w(0,t)
// are taken from the measured state (the slope in closed form up to one
// second difference of u); beyond that the trace is modeled on the drive,
// (d/dt + c)^2 w(0,t) = 0, whose defect decays with the free modes of the
// target field.
std::vector<double> p_boundary_derivs(const BarrierChain& chain, const StructuralTransform& trans,
                                      const Eigen::MatrixXd& A, double eps, double lambda_est,
                                      double b_est, const SimState& s, double t, int order,
                                      double c);

struct ControlParts {
    double integral_k = 0;  // int_0^1 k(1,y) u(y,t) dy
    double rY = 0;          // r(1) . Y
    double delta = 0;
    double p1 = 0;            // p(1,t)
    double p1_remainder = 0;  // Taylor truncation estimate
    double U = 0;
};

// Everything needed to evaluate U for one parameter estimate: kernel tables,
// barrier chain, structural transform. Rebuilding for a new estimate replaces
// only the tables (the chain and transform do not depend on (lambda, b)
// beyond the 1/b scaling of K, which is re-derived here).
class ControlEvaluator {
  public:
    ControlEvaluator(Eigen::MatrixXd A, double eps, Barrier barrier, SigmaBump sigma,
                     Eigen::VectorXd kappas, ControllerConfig cfg, int nx);

    void set_estimate(double lambda_est, double b_est);

    double lambda_est() const { return lambda_est_; }
    double b_est() const { return b_est_; }
    const KernelTables& tables() const { return tables_; }
    const StructuralTransform& transform() const { return trans_; }
    const BarrierChain& chain() const { return chain_; }
    const ControllerConfig& config() const { return cfg_; }
    const Eigen::MatrixXd& A() const { return A_; }
    double eps() const { return eps_; }
    int theta_sign() const { return theta_sign_; }
    int nx() const { return nx_; }

    std::vector<double> p0_derivs(const SimState& s, double t) const;
    // amplitude = the M in effect at t; delta-free evaluation uses amplitude 0.
    ControlParts eval(const SimState& s, double t, double amplitude) const;
    LogExtras extras(const SimState& s, double t) const;
    // w(x,t) = u - int k u - r Y - p on the table grid.
    std::vector<double> transform_profile(const SimState& s, double t) const;

  private:
    Eigen::MatrixXd A_;
    double eps_;
    ControllerConfig cfg_;
    int nx_;
    int theta_sign_;
    StructuralTransform trans_;
    BarrierChain chain_;
    double lambda_est_ = 0, b_est_ = 0;
    KernelTables tables_;
};

// w profile on the table grid from logged data (analysis consumes only logs
// plus tables; p is rebuilt from the logged boundary-derivative ladder).
std::vector<double> forward_transform(const std::vector<double>& u, const Eigen::VectorXd& Y,
                                      double t, const KernelTables& tables,
                                      const std::vector<double>& p0_derivs, int p_order);

// Corner + edge-midpoint + center samples of the box (9 points).
std::vector<std::pair<double, double>> box_samples(const ThetaBox& box);

struct MBound {
    double bound = 0;        // numerator / denominator; M must exceed this
    double numerator = 0;    // sup_{t >= t_M} |2 sum_j e^{-eps w_j^2 t} thacute_j|
    double denominator = 0;  // 1 - 2 sum_j e^{-eps w_j^2 t_M} (-1)^j / w_j
    double sup_t = 0;        // where the numerator sup was located
};

// Amplitude bound for a given candidate switch time t_M > 0; the denominator
// lies in (0,1) and tends to 0 as t_M -> 0+. The sup is located on the grid
// {t_M 1.02^k} (capped where the leading envelope underflows) and closed with
// the monotone-envelope tail argument.
MBound m_bound(const std::vector<double>& theta_acute, double t_M, double eps, int J);

// Bound fed with the mode coefficients of the initial transformed profile.
MBound select_M_nominal(const std::vector<double>& w0, double t_M, double eps, int J);

// Largest grid time t such that
//   h_n0 + 2 b int_0^t e^{(kappa_n - c) tau} theta sum_j e^{-eps w_j^2 tau} thacute_j dtau >= 0
// holds on [0, t]; t_final when the expression never goes negative.
double find_tM_nominal(double h_n0, const std::vector<double>& theta_acute, double theta,
                       double b, double kappa_n, double c, double eps, int J, double t_final,
                       double dt);

struct MBranch1 {
    double excluded = 0;  // (-r(1)Y(0) - p(1,0)) / theta_sign
    double Ua0 = 0;       // fully assembled initial control (integral term included)
    bool ok = false;
};
// Amplitude validation on [0, t_M): M > 0 and M away from the excluded value.
// The published exclusion omits the integral feedback term; the assembled
// value is recorded so a vanishing initial control is still visible.
MBranch1 check_M_initial(double M, const ControlEvaluator& law, const SimState& s0);

struct MBranch2 {
    double bound = 0;  // max over samples (or the single evaluator's bound)
    std::vector<double> sample_bounds;
    bool ok = false;
};
// Amplitude validation for t >= t_M; when box != nullptr the bound is
// maximized over box samples, rebuilding tables and re-transforming the
// initial state per sample.
MBranch2 check_M_tail(double M, double t_M, const SimState& s0, const ControlEvaluator& law,
                      const ThetaBox* box, int J);

struct MValidation {
    MBranch1 branch1;
    MBranch2 branch2;
};
// Composite validation; the box scan applies when t_M < t1. Throws MValueError
// naming the violated branch.
MValidation select_M_adaptive(double M, const ControlEvaluator& law, const SimState& s0,
                              double t_M, double t1, const ThetaBox& box, int J);

// Online evaluation of the adaptive switch-time condition: per box sample s
//   Phi_s(t) = h_n0 + 2 b_s theta int_0^t e^{(kappa_n - c) tau} (A_s + B_s)(tau) dtau,
//   A_s(tau) = sum_j e^{-eps w_j^2 tau} thacute_{s,j},
//   B_s(tau) = sum_j ((-1)^j / w_j) e^{-eps w_j^2 tau} (e_s(0) + eps w_j^2 I_{s,j}(tau)),
//   I_{s,j}(tau) = int_0^tau e^{-eps w_j^2 (tau - eta)} e^{c eta} e_s(eta) deta,
// with e_s = U_s - U_a the control error against the sample-s candidate law
// (amplitude-independent: the delta terms cancel). The damped form of I keeps
// every accumulator bounded. t_M = first grid time with max_s Phi_s <= 0.
class TMMonitor {
  public:
    TMMonitor(double h_n0, double theta, double kappa_n, double c, double eps, int J, double dt,
              std::vector<double> b_samples, std::vector<std::vector<double>> theta_acute);

    // Call once per grid step with e_s(k dt); the first call is step 0.
    void advance(const std::vector<double>& e_now);
    bool triggered() const { return triggered_; }
    double t_M() const { return t_M_; }  // NaN until triggered
    double current_max() const { return current_max_; }

  private:
    double h_n0_, theta_, kappa_n_, c_, eps_, dt_;
    int J_;
    std::vector<double> b_samples_;
    std::vector<std::vector<double>> thacute_;  // [sample][j]
    std::vector<double> aj_, decay_;            // a_j = eps w_j^2, e^{-a_j dt}
    std::vector<double> c0_, c1_;               // exponentially fitted update weights
    std::vector<double> Ej_;                    // e^{-a_j t}, advanced multiplicatively
    std::vector<std::vector<double>> I_;        // [sample][j]
    std::vector<double> e0_, gprev_, integral_, prev_integrand_;
    double ect_ = 1, ekct_ = 1;  // e^{c t}, e^{(kappa_n - c) t}
    double ecdt_ = 1, ekcdt_ = 1;
    int step_ = 0;
    bool triggered_ = false;
    double t_M_ = std::numeric_limits<double>::quiet_NaN();
    double current_max_ = std::numeric_limits<double>::infinity();
    double phi(int s_idx) const;
};

class NominalController {
  public:
    NominalController(const PlantParams& plant, Barrier barrier, SigmaBump sigma,
                      Eigen::VectorXd kappas, ControllerConfig cfg, int nx);

    double operator()(double t, const SimState& s) const;
    ControlParts parts(double t, const SimState& s) const;
    LogExtras extras(double t, const SimState& s) const;
    const ControlEvaluator& law() const { return law_; }

  private:
    ControlEvaluator law_;
    double M_;
};

// Adaptive controller: the evaluator is rebuilt from theta_hat at trigger
// instants (estimates right-continuous: the update at t_i is visible to the
// control call at t_i), candidates and the t_M monitor advance on every
// observed sample.
class AdaptiveController {
  public:
    AdaptiveController(Eigen::MatrixXd A, double eps, ThetaBox box, Barrier barrier,
                       SigmaBump sigma, Eigen::VectorXd kappas, ControllerConfig cfg,
                       IdentifierConfig icfg, double lambda0, double b0, int nx, double dt,
                       const SimState& s0);

    double operator()(double t, const SimState& s) const;
    bool observe(const SimState& s);  // tap; true when a trigger retuned the law
    LogExtras extras(double t, const SimState& s) const;

    const ControlEvaluator& law() const { return law_; }
    const Identifier& identifier() const { return ident_; }
    double amplitude(double t) const;  // piecewise-aware M(t)
    double t_M() const;                // NaN while unfound / monitor off
    bool tM_found() const;
    int rebuilds() const { return rebuilds_; }

  private:
    ControlEvaluator law_;
    ThetaBox box_;
    Identifier ident_;
    std::vector<ControlEvaluator> candidates_;
    std::unique_ptr<TMMonitor> monitor_;
    int rebuilds_ = 0;
};

}  // namespace parasafe
