#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "parasafe/errors.hpp"

namespace parasafe {

// Gain kernels for the boundary transform
//   w = u - int_0^x k(x,y) u(y) dy - r(x) Y - p(x,t):
//   eps k_xx = eps k_yy + (lambda+c) k,  k(x,x) = -(lambda+c)x/(2 eps),
//   k_y(x,0) = -r(x)B/eps,
//   eps r'' = r (A + cI),  r(0) = -K^T,  r'(0) = 0,
//   p_t = eps p_xx - c p,  p_x(0,t) = 0,  p(0,t) prescribed.
struct KernelTables {
    int nx = 0;      // table resolution (matches the plant grid)
    int refine = 1;  // internal solver grid = nx * refine
    double lambda = 0, b = 0, c = 0, eps = 0;

    Eigen::MatrixXd k;       // k(x_i, y_j), valid for j <= i
    Eigen::VectorXd k_row1;  // k(1, y_j)
    Eigen::MatrixXd r, rp, rpp;  // rows: r(x_i), r'(x_i), r''(x_i)

    int nfine = 0;
    Eigen::MatrixXd kfine;
    Eigen::MatrixXd rfine, rfine_p, rfine_pp;

    int iterations = 0;
    double last_increment = 0;
};

// r and its first two derivatives on nodes x_i = i/N via the block matrix
// D = [[0, (A+cI)/eps], [I, 0]]: r(x) = (-K^T, 0) exp(D x) [I; 0].
struct RTable {
    Eigen::MatrixXd r, rp, rpp;  // (N+1) x n
};
RTable solve_r(const Eigen::MatrixXd& A, const Eigen::VectorXd& K, double c, double eps, int N);

KernelTables build_kernel_tables(const Eigen::MatrixXd& A, const Eigen::VectorXd& K,
                                 double lambda, double b, double c, double eps, int nx,
                                 int refine = 4, double tol = 1e-10, int max_iter = 200);

// Max-norm residuals of the defining equations, evaluated with 4th-order
// finite differences on the internal solver grid.
struct KernelResiduals {
    double k_pde = 0;     // eps k_xx - eps k_yy - (lambda+c) k
    double k_diag = 0;    // k(x,x) + (lambda+c)x/(2 eps)
    double k_ybc = 0;     // k_y(x,0) + r(x)B/eps
    double r_ode_fd = 0;  // eps r'' - r(A+cI), FD second derivative
    double r_ode_exact = 0;  // same with the analytic exp(Dx) derivative
    double r_init = 0;       // |r(0)+K^T| + |r'(0)|
    int nx = 0, refine = 0, iterations = 0;
    double last_increment = 0;
};
KernelResiduals kernel_residuals(const KernelTables& t, const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& K);

// Boundary trace p(0,t) together with as many time derivatives as the caller
// can supply; solve_p consumes derivatives up to its order argument.
class PBoundary {
  public:
    virtual ~PBoundary() = default;
    virtual double deriv(int m, double t) const = 0;  // m = 0 is the value
    virtual int max_order() const = 0;
};

struct ConstBoundary final : PBoundary {
    double q0;
    explicit ConstBoundary(double v) : q0(v) {}
    double deriv(int m, double) const override { return m == 0 ? q0 : 0.0; }
    int max_order() const override { return 1 << 20; }
};

struct ExpBoundary final : PBoundary {  // q0 * exp(rate * t)
    double q0, rate;
    ExpBoundary(double q, double r) : q0(q), rate(r) {}
    double deriv(int m, double t) const override {
        double v = q0 * std::exp(rate * t);
        for (int i = 0; i < m; ++i) v *= rate;
        return v;
    }
    int max_order() const override { return 1 << 20; }
};

// Derivatives frozen at one time instant (what the controller ladder emits).
struct VectorBoundary final : PBoundary {
    double t0;
    std::vector<double> d;
    VectorBoundary(double t, std::vector<double> derivs) : t0(t), d(std::move(derivs)) {}
    double deriv(int m, double t) const override {
        if (m >= static_cast<int>(d.size())) throw OrderError("derivative beyond stored ladder");
        if (std::abs(t - t0) > 1e-12) throw DomainError("VectorBoundary sampled off its time");
        return d[m];
    }
    int max_order() const override { return static_cast<int>(d.size()) - 1; }
};

struct PResult {
    double value = 0;
    double remainder = 0;  // |last term| * e
};

// Lateral Taylor solution p(x,t) = sum_m ((d/dt + c)^m q)(t) x^{2m}/(eps^m (2m)!)
// with `order` = highest m. Throws OrderError when q cannot supply `order`
// derivatives.
PResult solve_p(const PBoundary& q, double c, double eps, double x, double t, int order);

// Residual p_t - eps p_xx + c p of the truncated series, term-wise exact in x
// (needs one extra time derivative of q).
double p_pde_residual(const PBoundary& q, double c, double eps, int order,
                      const std::vector<double>& xs, const std::vector<double>& ts);

}  // namespace parasafe
