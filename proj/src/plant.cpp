#include "parasafe/plant.hpp"

#include <cmath>

namespace parasafe {

void PlantParams::validate() const {
    const int m = n();
    if (m < 1 || A.rows() != A.cols()) throw DimensionError("A must be square and nonempty");
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const double want = (j == i + 1) ? 1.0 : 0.0;
            if (A(i, j) != want)
                throw StructureError("A must have unit superdiagonal and zeros above it (row " +
                                     std::to_string(i) + ", col " + std::to_string(j) + ")");
        }
    }
    if (!(b > 0)) throw SignError("b must be positive");
    if (!(eps > 0)) throw SignError("eps must be positive");
    if (box.lambda_min > box.lambda_max || box.b_min > box.b_max)
        throw BoxError("empty parameter box");
    if (!(box.b_min > 0)) throw SignError("parameter box must keep b positive");
    if (!box.contains(lambda, b)) throw BoxError("true (lambda, b) outside the parameter box");
}

void Grid::validate(double eps) const {
    if (nx < 2) throw DimensionError("nx must be at least 2");
    if (!(dt > 0) || !(t_final > 0)) throw DomainError("dt and t_final must be positive");
    const double ratio = eps * dt / (dx() * dx());
    if (ratio > 0.5 + 1e-12)
        throw StabilityError("eps*dt/dx^2 = " + std::to_string(ratio) + " exceeds 1/2");
}

SimState init_state(const std::function<double(double)>& u0, const Eigen::VectorXd& Y0,
                    const Grid& grid) {
    SimState s;
    s.u.resize(grid.nx + 1);
    for (int i = 0; i <= grid.nx; ++i) s.u[i] = u0(i * grid.dx());
    s.Y = Y0;
    s.t = 0;
    return s;
}

void step(SimState& s, double U_in, const PlantParams& p, const Grid& grid) {
    const int nx = grid.nx;
    const double dx2 = grid.dx() * grid.dx();
    const double dt = grid.dt;
    const double u0_pre = s.u[0];

    std::vector<double> un(nx + 1);
    // Ghost node u[-1] = u[1] realizes u_x(0,t) = 0 at second order.
    un[0] = s.u[0] + dt * (p.eps * (2.0 * s.u[1] - 2.0 * s.u[0]) / dx2 + p.lambda * s.u[0]);
    for (int i = 1; i < nx; ++i)
        un[i] = s.u[i] +
                dt * (p.eps * (s.u[i + 1] - 2.0 * s.u[i] + s.u[i - 1]) / dx2 + p.lambda * s.u[i]);
    un[nx] = U_in;

    s.Y += dt * (p.A * s.Y + p.B() * u0_pre);
    s.u = std::move(un);
    s.t += dt;

    for (double v : s.u)
        if (!std::isfinite(v)) throw NonFiniteError("field diverged at t = " + std::to_string(s.t));
    if (!s.Y.allFinite()) throw NonFiniteError("ODE state diverged at t = " + std::to_string(s.t));
}

double field_l2(const std::vector<double>& u, double dx) {
    double acc = 0.5 * (u.front() * u.front() + u.back() * u.back());
    for (std::size_t i = 1; i + 1 < u.size(); ++i) acc += u[i] * u[i];
    return std::sqrt(acc * dx);
}

double field_grad_l2(const std::vector<double>& u, double dx) {
    // One-sided differences on cells; trapezoid over cell midpoints reduces to
    // a plain cell sum.
    double acc = 0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        const double g = (u[i + 1] - u[i]) / dx;
        acc += g * g;
    }
    return std::sqrt(acc * dx);
}

TrajectoryLog run_closed_loop(SimState s, const PlantParams& p, const Grid& grid,
                              const Controller& controller, const std::vector<Tap>& taps,
                              int stride, const ExtrasProbe& extras) {
    if (stride < 1) throw DomainError("stride must be >= 1");
    TrajectoryLog log;
    log.stride = stride;
    const int steps = grid.steps();
    log.t.reserve(steps + 1);

    auto sample = [&](double U_applied, long k) {
        log.t.push_back(s.t);
        log.Y.push_back(s.Y);
        log.u0.push_back(s.u[0]);
        log.u1.push_back(s.u[grid.nx]);
        log.U.push_back(U_applied);
        log.norm_u.push_back(field_l2(s.u, grid.dx()));
        log.norm_ux.push_back(field_grad_l2(s.u, grid.dx()));
        LogExtras e;
        if (extras) e = extras(s.t, s);
        log.h.push_back(e.h);
        log.h_chain.push_back(e.h_chain);
        log.lambda_hat.push_back(e.lambda_hat);
        log.b_hat.push_back(e.b_hat);
        if (k % stride == 0 || k == steps) {
            log.snap_t.push_back(s.t);
            log.snap_u.push_back(s.u);
            log.snap_p0_derivs.push_back(e.p0_derivs);
        }
    };

    // The boundary node carries the Dirichlet datum right-continuously:
    // u(1, t_k) = U(t_k), the value the stencil sees over [t_k, t_{k+1}).
    // Taps observe that trace; when one retunes the law the datum is
    // re-evaluated, so an identifier reads the left limit at its own trigger
    // while the retuned value takes effect at t_k.
    auto refresh = [&] {
        const double U = controller(s.t, s);
        s.u[grid.nx] = U;
        return U;
    };
    auto fire = [&] {
        bool retuned = false;
        for (const auto& tap : taps) retuned = tap(s) || retuned;
        return retuned;
    };

    double U = refresh();
    if (fire()) U = refresh();
    for (long k = 0; k < steps; ++k) {
        sample(U, k);
        step(s, U, p, grid);
        U = refresh();
        if (fire()) U = refresh();
    }
    sample(U, steps);
    return log;
}

}  // namespace parasafe
