#pragma once

#include <Eigen/Dense>
#include <vector>

#include "parasafe/errors.hpp"
#include "parasafe/plant.hpp"

namespace parasafe {

// Triggered batch least-squares identifier for (lambda, b). Updates fire at
// t_i = i*T over the sliding window [mu_i, t_i], mu_i = max(0, i - N_tilde)*T,
// using the integral identities p_mode = lambda * g_mode and p_b = b * q_b.
struct IdentifierConfig {
    double T = 0.5;
    int N_tilde = 12;
    std::vector<int> modes = {1};
    double q_tol_factor = 1e-12;  // q_tol = factor * window length
    double ratio_tol = 0.05;      // relative multi-mode consistency tolerance
};

struct Schedule {
    double t_i = 0;
    double mu_i = 0;
};
Schedule trigger_schedule(int i, double T, int N_tilde);

// Trapezoid of sin(pi*nbar*x) * u(x) over [0,1].
double mode_integral(const std::vector<double>& u, int nbar);

struct SignalSample {
    double t = 0;
    double u0 = 0, u1 = 0;
    Eigen::VectorXd modes;
    Eigen::VectorXd Y;
};

class SignalLog {
  public:
    explicit SignalLog(double dt) : dt_(dt) {}
    void append(SignalSample s);
    int index_of(double t) const;  // WindowError when t is not a sample time
    const SignalSample& at(int i) const { return samples_[i]; }
    int size() const { return static_cast<int>(samples_.size()); }
    double dt() const { return dt_; }

  private:
    double dt_;
    std::vector<SignalSample> samples_;
};

// Regressor time series over one window, cumulative from mu.
struct WindowRegressors {
    std::vector<double> t;
    std::vector<std::vector<double>> p_mode, g_mode;  // [mode][sample]
    std::vector<double> p_b, q_b;
};
WindowRegressors build_regressors(const SignalLog& log, double mu, double t_end,
                                  const std::vector<int>& modes, double eps,
                                  const Eigen::MatrixXd& A);

struct ZGPair {
    std::vector<double> H1, Q1;  // per mode
    double H2 = 0, Q2 = 0;
};
ZGPair assemble_ZG(const WindowRegressors& w);

struct EstimateUpdate {
    double lambda_hat = 0, b_hat = 0;
    bool held_lambda = false, held_b = false;
    bool clamped_lambda = false, clamped_b = false;
    double Q1_used = 0, Q2 = 0;
};
// Componentwise constrained least squares: ratio H/Q clamped to the box when
// the excitation Q exceeds q_tol, previous value held otherwise. Throws
// InconsistencyError when two well-excited modes disagree beyond ratio_tol.
EstimateUpdate update_estimate(double lambda_prev, double b_prev, const ZGPair& zg,
                               const ThetaBox& box, double q_tol, double ratio_tol);

struct Certificate {
    int i = 0;
    double t_i = 0, mu_i = 0;
    double Q1 = 0, Q2 = 0;
    double lambda_hat = 0, b_hat = 0;
    bool held_lambda = false, held_b = false;
    bool clamped_lambda = false, clamped_b = false;
};

class Identifier {
  public:
    Identifier(IdentifierConfig cfg, ThetaBox box, Eigen::MatrixXd A, double eps, double dt,
               double lambda0, double b0);

    void append(double t, const SimState& s);
    // Fires when t is the next trigger time; returns true when the estimate
    // was recomputed (callers rebuild kernel tables on true).
    bool maybe_update(double t);

    double lambda_hat() const { return lambda_hat_; }
    double b_hat() const { return b_hat_; }
    const std::vector<Certificate>& certificates() const { return certs_; }
    const SignalLog& log() const { return log_; }
    const IdentifierConfig& config() const { return cfg_; }

  private:
    IdentifierConfig cfg_;
    ThetaBox box_;
    Eigen::MatrixXd A_;
    double eps_;
    SignalLog log_;
    int next_trigger_ = 1;
    double lambda_hat_, b_hat_;
    std::vector<Certificate> certs_;
};

}  // namespace parasafe
