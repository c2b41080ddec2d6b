#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "parasafe/errors.hpp"

namespace parasafe {

// Softening bump added to the barrier when the initial condition is unsafe:
//   sigma(t) = exp(1/t_a^2) * (beta - h0) * exp(-1/(t - t_a)^2)  on [0, t_a),
//   sigma(t) = 0 for t >= t_a, and sigma == 0 when h0 > 0.
// All derivatives are taken as 0 at t = 0 and t = t_a (limits at the
// essential singularity); in between they are closed-form
// rational-exponential expressions.
class SigmaBump {
  public:
    SigmaBump() = default;  // inactive
    SigmaBump(double h0, double t_a, double beta);

    bool active() const { return active_; }
    double t_a() const { return t_a_; }
    // m-th derivative; m = 0 is the value itself.
    double deriv(int m, double t) const;

  private:
    bool active_ = false;
    double h0_ = 0, t_a_ = 1, beta_ = 0, amp_ = 0;
    // Prefactor polynomials P_m(y), y = 1/(t - t_a):
    // d^m/dt^m e^{-y^2 rewritten} = P_m(y) e^{-1/(t-t_a)^2}.
    mutable std::vector<std::vector<double>> pref_;
    const std::vector<double>& prefactor(int m) const;
};

// Barrier h(y1, t) = theta * y1 + phi(t) with constant nonzero theta. Both
// built-in families have this shape; the chain composition below relies on it
// and registration of anything else is rejected.
class Barrier {
  public:
    static Barrier affine();                                // h = y1
    static Barrier exp_envelope(double a, double d);        // h = a e^{-d t} - y1
    // phi given by its derivatives phi^(m), m = 0..phi_derivs.size()-1.
    static Barrier custom(double theta, std::vector<std::function<double(double)>> phi_derivs);

    double theta() const { return theta_; }
    int max_phi_order() const { return max_order_; }
    double phi_deriv(int m, double t) const;
    double value(double y1, double t) const { return theta_ * y1 + phi_deriv(0, t); }
    // Mixed partial d^{ny+nt} h / dy1^ny dt^nt.
    double partial(int ny, int nt, double y1, double t) const;

  private:
    Barrier() = default;
    double theta_ = 0;
    int max_order_ = std::numeric_limits<int>::max();
    // Built-ins evaluate phi directly; custom uses the registered closures.
    double a_ = 0, d_ = 0;
    enum class Kind { Affine, ExpEnvelope, Custom } kind_ = Kind::Affine;
    std::vector<std::function<double(double)>> custom_;
};

// State transform Z = Tz Y giving Z' = Az Z + B u(0,t) + B K^T Y with Az the
// upshift matrix. Built once from (A, b); verified by the exact identity
// Tz A = Az Tz + B K^T.
struct StructuralTransform {
    Eigen::MatrixXd varrho;  // varrho(i,j), 0-based storage of the 1-based table
    Eigen::MatrixXd Tz;      // unit lower triangular
    Eigen::VectorXd K;       // K^T = (1/b)(varrho_{n,1..n})
    Eigen::MatrixXd Az;
    Eigen::MatrixXd BKt;     // B K^T (independent of b: zero rows + varrho row)
};

StructuralTransform build_structural_transform(const Eigen::MatrixXd& A, double b);

Eigen::MatrixXd make_Ah(const Eigen::VectorXd& kappas);  // -kappa_i diag, unit superdiag

// Barrier chain h_1 = h + sigma, h_{i+1} = sum_j dh_i/dz_j z_{j+1} + dh_i/dt
// + kappa_i h_i. For theta constant each h_i is affine in Z:
//   h_i = C_i . Z + psi_i(t),  psi_i = prod_{l<i}(d/dt + kappa_l)(phi + sigma).
class BarrierChain {
  public:
    BarrierChain(Barrier barrier, SigmaBump sigma, Eigen::VectorXd kappas);

    int n() const { return static_cast<int>(kappas_.size()); }
    const Eigen::VectorXd& kappas() const { return kappas_; }
    const Barrier& barrier() const { return barrier_; }
    const SigmaBump& sigma() const { return sigma_; }

    // psi_i^(deriv)(t), i 1-based.
    double time_part(int i, int deriv, double t) const;
    double h_i(int i, const Eigen::VectorXd& Z, double t) const;
    Eigen::VectorXd eval(const Eigen::VectorXd& Z, double t) const;  // h_1..h_n
    double dh_dz(int i, int j) const { return C_(i - 1, j - 1); }    // constant
    double dh_dt(int i, double t) const { return time_part(i, 1, t); }

    // f = (1/b_est)(q . Z + g(t)) with q = shift(C_n) + kappa_n C_n and
    // g = psi_n' + kappa_n psi_n; exposes q and g^(r) so time derivatives of
    // the transform boundary p(0,t) = -f/theta stay closed-form.
    const Eigen::VectorXd& f_state_coeff() const { return q_; }
    double f_time_part(int r, double t) const;
    double f(const Eigen::VectorXd& Z, double t, double b_est) const;

  private:
    Barrier barrier_;
    SigmaBump sigma_;
    Eigen::VectorXd kappas_;
    Eigen::MatrixXd C_;  // C(i-1, j-1) = dh_i/dz_j
    Eigen::MatrixXd E_;  // E(i-1, m): coefficient of (phi+sigma)^(m) in psi_i
    Eigen::VectorXd q_;
    double phi_sigma(int m, double t) const;
};

struct GainSelection {
    Eigen::VectorXd kappas;
    Eigen::VectorXd kappa_acute;  // thresholds for i = 1..n-1 (0 for i = n)
};

// Validates user gains against kappa_i > max(0, kappa_acute_i) (i < n) and
// kappa_n <= c, or auto-selects kappa_i = max(0, kappa_acute_i) + margin,
// kappa_n = c. Also enforces h_i(Z0, 0) > 0 for every i (the induction that
// makes the thresholds well defined).
GainSelection select_kappas(const Barrier& barrier, const SigmaBump& sigma,
                            const Eigen::VectorXd& Z0, double c,
                            const Eigen::VectorXd* user_kappas = nullptr, double margin = 1.0);

}  // namespace parasafe
