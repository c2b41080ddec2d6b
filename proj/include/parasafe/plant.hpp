#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "parasafe/errors.hpp"

namespace parasafe {

// Admissible interval box for the uncertain pair (lambda, b).
struct ThetaBox {
    double lambda_min = 0, lambda_max = 0;
    double b_min = 0, b_max = 0;

    bool contains(double lambda, double b) const {
        return lambda >= lambda_min && lambda <= lambda_max && b >= b_min && b <= b_max;
    }
    double clamp_lambda(double v) const { return std::clamp(v, lambda_min, lambda_max); }
    double clamp_b(double v) const { return std::clamp(v, b_min, b_max); }
};

// ODE-PDE cascade:  Y' = A Y + B u(0,t),  u_t = eps u_xx + lambda u,
// u_x(0,t) = 0, u(1,t) = U(t), with B = (0,...,0,b)^T and A in companion form
// (unit superdiagonal, zeros above it).
struct PlantParams {
    Eigen::MatrixXd A;
    double b = 0;
    double eps = 0;
    double lambda = 0;
    ThetaBox box;

    int n() const { return static_cast<int>(A.rows()); }
    Eigen::VectorXd B() const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n());
        v(n() - 1) = b;
        return v;
    }
    // Throws StructureError/SignError/BoxError/DimensionError.
    void validate() const;
};

struct Grid {
    int nx = 0;          // number of cells; nx+1 nodes
    double dt = 0;
    double t_final = 0;

    double dx() const { return 1.0 / nx; }
    int steps() const { return static_cast<int>(std::llround(t_final / dt)); }
    // Explicit-scheme stability eps*dt/dx^2 <= 1/2.
    void validate(double eps) const;
};

struct SimState {
    std::vector<double> u;  // nodes 0..nx
    Eigen::VectorXd Y;
    double t = 0;
};

SimState init_state(const std::function<double(double)>& u0, const Eigen::VectorXd& Y0,
                    const Grid& grid);

// One explicit step: FTCS on the PDE interior with a second-order ghost node
// at x=0 (u[-1] := u[1]), Dirichlet u[nx] <- U_in, forward Euler on the ODE
// using the pre-step u(0,t). Throws NonFiniteError when the state leaves the
// finite range (open-loop divergence is expected behavior, not a crash).
void step(SimState& s, double U_in, const PlantParams& p, const Grid& grid);

// Trapezoid L2 norm of the field over [0,1].
double field_l2(const std::vector<double>& u, double dx);
// Trapezoid L2 norm of the one-sided difference quotient field.
double field_grad_l2(const std::vector<double>& u, double dx);

// Per-sample extras supplied by the scenario layer (barrier values, current
// estimates, boundary-derivative ladder for reconstructing p offline).
struct LogExtras {
    double h = 0;                      // raw barrier h(y1,t)
    Eigen::VectorXd h_chain;           // h_1..h_n
    double lambda_hat = 0, b_hat = 0;
    std::vector<double> p0_derivs;     // d^m/dt^m p(0,t), m = 0..depth
};

struct TrajectoryLog {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> Y;
    std::vector<double> u0, u1, U;
    std::vector<double> h;
    std::vector<Eigen::VectorXd> h_chain;
    std::vector<double> lambda_hat, b_hat;
    std::vector<double> norm_u, norm_ux;

    int stride = 1;
    std::vector<double> snap_t;
    std::vector<std::vector<double>> snap_u;
    std::vector<std::vector<double>> snap_p0_derivs;

    std::size_t size() const { return t.size(); }
};

using Controller = std::function<double(double t, const SimState&)>;
// Observers run once per step on the fresh state; a tap returns true when it
// retuned the control law (the boundary datum is then re-evaluated before the
// state is sampled or stepped).
using Tap = std::function<bool(const SimState&)>;
using ExtrasProbe = std::function<LogExtras(double t, const SimState&)>;

// Steps the plant to t_final, invoking the controller each step (on the
// pre-step state) and every tap after each step. Samples every step into the
// log; field snapshots every `stride` samples. The initial state is sampled
// and passed to taps before the first step.
TrajectoryLog run_closed_loop(SimState s, const PlantParams& p, const Grid& grid,
                              const Controller& controller, const std::vector<Tap>& taps = {},
                              int stride = 1, const ExtrasProbe& extras = nullptr);

}  // namespace parasafe
