#include "parasafe/kernels.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

namespace parasafe {

RTable solve_r(const Eigen::MatrixXd& A, const Eigen::VectorXd& K, double c, double eps, int N) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || K.size() != n) throw DimensionError("A/K size mismatch in solve_r");
    if (!(eps > 0)) throw SignError("eps must be positive");
    if (N < 1) throw DimensionError("need at least one interval");

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    D.topRightCorner(n, n) = (A + c * Eigen::MatrixXd::Identity(n, n)) / eps;
    D.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);

    Eigen::RowVectorXd w(2 * n);
    w << -K.transpose(), Eigen::RowVectorXd::Zero(n);
    const Eigen::RowVectorXd wD = w * D;
    const Eigen::RowVectorXd wD2 = wD * D;

    RTable out;
    out.r.resize(N + 1, n);
    out.rp.resize(N + 1, n);
    out.rpp.resize(N + 1, n);
    const double h = 1.0 / N;
    for (int i = 0; i <= N; ++i) {
        const Eigen::MatrixXd E = (D * (i * h)).exp();
        out.r.row(i) = (w * E).head(n);
        out.rp.row(i) = (wD * E).head(n);
        out.rpp.row(i) = (wD2 * E).head(n);
    }
    return out;
}

namespace {

// Goursat coordinates xi = x+y, eta = x-y; the kernel PDE becomes the fixed
// point of an integral map over {0 <= eta <= xi <= 2-eta}. G is stored dense
// with rows j = eta index (0..N), columns i = xi index (0..2N); entries
// outside j <= i <= 2N-j are unused.
struct GoursatGrid {
    int N;
    double h;
    Eigen::MatrixXd G;
};

// Cumulative integral of f[0..m] on a uniform grid, 4th order: Simpson-grade
// starting rules, then the 4-point corrector for every further step.  Falls
// back to lower order only when fewer nodes exist (short columns near the
// triangle corners contribute O(h^3) locally, which is harmless).
void cum4(const double* f, int m, double h, double* I) {
    I[0] = 0.0;
    if (m < 1) return;
    if (m == 1) {
        I[1] = 0.5 * h * (f[0] + f[1]);
        return;
    }
    if (m == 2) {
        I[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
        I[2] = I[1] + h / 12.0 * (-f[0] + 8.0 * f[1] + 5.0 * f[2]);
        return;
    }
    I[1] = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    I[2] = I[1] + h / 24.0 * (-f[0] + 13.0 * f[1] + 13.0 * f[2] - f[3]);
    for (int j = 3; j <= m; ++j)
        I[j] = I[j - 1] +
               h / 24.0 * (f[j - 3] - 5.0 * f[j - 2] + 19.0 * f[j - 1] + 9.0 * f[j]);
}

GoursatGrid solve_goursat(const Eigen::VectorXd& rB_over_eps, double mu4, int N, double tol,
                          int max_iter, int* iterations, double* last_increment) {
    const double h = 1.0 / N;
    GoursatGrid grid{N, h, Eigen::MatrixXd::Zero(N + 1, 2 * N + 1)};
    Eigen::MatrixXd& G = grid.G;

    Eigen::VectorXd RB(N + 1);
    cum4(rB_over_eps.data(), N, h, RB.data());

    Eigen::MatrixXd colint(N + 1, 2 * N + 1);  // colint(j,i) = int_0^{eta_j} G(xi_i, tau) dtau
    Eigen::MatrixXd CS(N + 1, 2 * N + 1);      // CS(j,i) = int_{xi_j}^{xi_i} colint(j, m) dm
    Eigen::VectorXd DI(N + 1);                 // int_0^{eta_j} [int_0^m G(m,tau) dtau] dm

    std::vector<double> fbuf(2 * N + 1), ibuf(2 * N + 1);

    int it = 0;
    double inc = 0;
    for (it = 1; it <= max_iter; ++it) {
        colint.setZero();
        for (int i = 0; i <= 2 * N; ++i) {
            const int jmax = std::min(i, 2 * N - i);
            for (int j = 0; j <= jmax; ++j) fbuf[j] = G(j, i);
            cum4(fbuf.data(), jmax, h, ibuf.data());
            for (int j = 0; j <= jmax; ++j) colint(j, i) = ibuf[j];
        }
        for (int l = 0; l <= N; ++l) fbuf[l] = colint(l, l);
        cum4(fbuf.data(), N, h, DI.data());
        CS.setZero();
        for (int j = 0; j <= N; ++j) {
            const int len = 2 * (N - j);
            for (int i = 0; i <= len; ++i) fbuf[i] = colint(j, j + i);
            cum4(fbuf.data(), len, h, ibuf.data());
            for (int i = 0; i <= len; ++i) CS(j, j + i) = ibuf[i];
        }

        inc = 0;
        for (int j = 0; j <= N; ++j) {
            const double base = RB(j) + 2.0 * mu4 * DI(j);
            for (int i = j; i <= 2 * N - j; ++i) {
                const double g = -mu4 * (i + j) * h + base + mu4 * CS(j, i);
                inc = std::max(inc, std::abs(g - G(j, i)));
                G(j, i) = g;
            }
        }
        if (inc <= tol) break;
    }
    if (inc > tol)
        throw ConvergenceError("Goursat iteration stalled at increment " + std::to_string(inc));
    if (iterations) *iterations = it;
    if (last_increment) *last_increment = inc;
    return grid;
}

}  // namespace

KernelTables build_kernel_tables(const Eigen::MatrixXd& A, const Eigen::VectorXd& K,
                                 double lambda, double b, double c, double eps, int nx,
                                 int refine, double tol, int max_iter) {
    if (refine < 1) throw DimensionError("refine must be >= 1");
    if (nx < 2) throw DimensionError("nx must be >= 2");
    KernelTables t;
    t.nx = nx;
    t.refine = refine;
    t.lambda = lambda;
    t.b = b;
    t.c = c;
    t.eps = eps;
    t.nfine = nx * refine;

    const RTable rt = solve_r(A, K, c, eps, t.nfine);
    t.rfine = rt.r;
    t.rfine_p = rt.rp;
    t.rfine_pp = rt.rpp;

    const int n = static_cast<int>(A.rows());
    Eigen::VectorXd rB_over_eps(t.nfine + 1);
    for (int i = 0; i <= t.nfine; ++i) rB_over_eps(i) = rt.r(i, n - 1) * b / eps;

    const double mu4 = (lambda + c) / (4.0 * eps);
    const GoursatGrid g =
        solve_goursat(rB_over_eps, mu4, t.nfine, tol, max_iter, &t.iterations, &t.last_increment);

    t.kfine.setZero(t.nfine + 1, t.nfine + 1);
    for (int a = 0; a <= t.nfine; ++a)
        for (int bidx = 0; bidx <= a; ++bidx) t.kfine(a, bidx) = g.G(a - bidx, a + bidx);

    t.k.setZero(nx + 1, nx + 1);
    t.r.resize(nx + 1, n);
    t.rp.resize(nx + 1, n);
    t.rpp.resize(nx + 1, n);
    for (int a = 0; a <= nx; ++a) {
        for (int bidx = 0; bidx <= a; ++bidx) t.k(a, bidx) = t.kfine(a * refine, bidx * refine);
        // Diagonal is imposed in closed form so the table satisfies it exactly.
        t.k(a, a) = -(lambda + c) * (static_cast<double>(a) / nx) / (2.0 * eps);
        t.r.row(a) = t.rfine.row(a * refine);
        t.rp.row(a) = t.rfine_p.row(a * refine);
        t.rpp.row(a) = t.rfine_pp.row(a * refine);
    }
    t.k_row1 = t.k.row(nx);
    return t;
}

KernelResiduals kernel_residuals(const KernelTables& t, const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& K) {
    KernelResiduals res;
    res.nx = t.nx;
    res.refine = t.refine;
    res.iterations = t.iterations;
    res.last_increment = t.last_increment;

    const int N = t.nfine;
    const double h = 1.0 / N;
    const double mu = t.lambda + t.c;
    const int n = static_cast<int>(A.rows());

    // 4th-order central second derivative: (-1, 16, -30, 16, -1)/(12 h^2).
    auto d2 = [&](double m2, double m1, double z, double p1, double p2) {
        return (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
    };

    for (int a = 4; a + 2 <= N; ++a) {
        for (int bidx = 2; bidx + 2 <= a; ++bidx) {
            const double kxx =
                d2(t.kfine(a - 2, bidx), t.kfine(a - 1, bidx), t.kfine(a, bidx),
                   t.kfine(a + 1, bidx), t.kfine(a + 2, bidx));
            const double kyy =
                d2(t.kfine(a, bidx - 2), t.kfine(a, bidx - 1), t.kfine(a, bidx),
                   t.kfine(a, bidx + 1), t.kfine(a, bidx + 2));
            const double r = t.eps * kxx - t.eps * kyy - mu * t.kfine(a, bidx);
            res.k_pde = std::max(res.k_pde, std::abs(r));
        }
    }

    for (int a = 0; a <= N; ++a) {
        const double x = a * h;
        res.k_diag = std::max(res.k_diag, std::abs(t.kfine(a, a) + mu * x / (2.0 * t.eps)));
    }

    // 4th-order one-sided first derivative in y at y=0.
    for (int a = 4; a <= N; ++a) {
        const double ky = (-25.0 / 12.0 * t.kfine(a, 0) + 4.0 * t.kfine(a, 1) -
                           3.0 * t.kfine(a, 2) + 4.0 / 3.0 * t.kfine(a, 3) -
                           0.25 * t.kfine(a, 4)) /
                          h;
        const double rB = t.rfine(a, n - 1) * t.b;
        res.k_ybc = std::max(res.k_ybc, std::abs(ky + rB / t.eps));
    }

    const Eigen::MatrixXd AcI = A + t.c * Eigen::MatrixXd::Identity(n, n);
    for (int a = 2; a + 2 <= N; ++a) {
        Eigen::RowVectorXd rdd(n);
        for (int j = 0; j < n; ++j)
            rdd(j) = d2(t.rfine(a - 2, j), t.rfine(a - 1, j), t.rfine(a, j), t.rfine(a + 1, j),
                        t.rfine(a + 2, j));
        const Eigen::RowVectorXd resid = t.eps * rdd - t.rfine.row(a) * AcI;
        res.r_ode_fd = std::max(res.r_ode_fd, resid.cwiseAbs().maxCoeff());
    }
    for (int a = 0; a <= N; ++a) {
        const Eigen::RowVectorXd resid = t.eps * t.rfine_pp.row(a) - t.rfine.row(a) * AcI;
        res.r_ode_exact = std::max(res.r_ode_exact, resid.cwiseAbs().maxCoeff());
    }
    res.r_init = (t.rfine.row(0).transpose() + K).cwiseAbs().maxCoeff() +
                 t.rfine_p.row(0).cwiseAbs().maxCoeff();
    return res;
}

namespace {

// phi_m = (d/dt + c)^m q expanded binomially over stored derivatives.
std::vector<double> phi_coeffs(const PBoundary& q, double c, double t, int order) {
    std::vector<double> d(order + 1);
    for (int m = 0; m <= order; ++m) d[m] = q.deriv(m, t);
    std::vector<double> phi(order + 1, 0.0);
    for (int m = 0; m <= order; ++m) {
        double binom = 1.0, cpow = 1.0;
        // sum_k C(m,k) c^{m-k} d[k]; iterate k downward so c-powers build up.
        for (int k = m; k >= 0; --k) {
            phi[m] += binom * cpow * d[k];
            if (k > 0) binom *= static_cast<double>(k) / (m - k + 1.0);
            cpow *= c;
        }
    }
    return phi;
}

}  // namespace

PResult solve_p(const PBoundary& q, double c, double eps, double x, double t, int order) {
    if (order < 0) throw OrderError("order must be nonnegative");
    if (order > q.max_order())
        throw OrderError("requested order " + std::to_string(order) +
                         " exceeds available time-derivatives (" +
                         std::to_string(q.max_order()) + ")");
    if (!(eps > 0)) throw SignError("eps must be positive");

    const auto phi = phi_coeffs(q, c, t, order);
    PResult out;
    double term = 0;
    double xfac = 1.0;  // x^{2m} / (eps^m (2m)!)
    for (int m = 0; m <= order; ++m) {
        if (m > 0) xfac *= x * x / (eps * (2.0 * m - 1.0) * (2.0 * m));
        term = phi[m] * xfac;
        out.value += term;
    }
    out.remainder = std::abs(term) * std::exp(1.0);
    return out;
}

double p_pde_residual(const PBoundary& q, double c, double eps, int order,
                      const std::vector<double>& xs, const std::vector<double>& ts) {
    if (order + 1 > q.max_order())
        throw OrderError("residual needs one extra time derivative beyond the series order");
    double worst = 0;
    for (double t : ts) {
        const auto phi = phi_coeffs(q, c, t, order + 1);
        // phi'_m = phi_{m+1} - c phi_m  (since (d/dt+c) phi_m = phi_{m+1}).
        for (double x : xs) {
            double pt = 0, pxx = 0, p = 0, xfac = 1.0;
            for (int m = 0; m <= order; ++m) {
                if (m > 0) xfac *= x * x / (eps * (2.0 * m - 1.0) * (2.0 * m));
                p += phi[m] * xfac;
                pt += (phi[m + 1] - c * phi[m]) * xfac;  // phi'_m = phi_{m+1} - c phi_m
                if (m < order) pxx += phi[m + 1] * xfac / eps;
            }
            worst = std::max(worst, std::abs(pt - eps * pxx + c * p));
        }
    }
    return worst;
}

}  // namespace parasafe
