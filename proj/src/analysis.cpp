#include "parasafe/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace parasafe {

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Ah, const Eigen::MatrixXd& Q) {
    const int n = static_cast<int>(Ah.rows());
    if (Ah.cols() != n || Q.rows() != n || Q.cols() != n)
        throw DimensionError("square matrices of equal size required");
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    // vec(Ah^T P) = (I (x) Ah^T) vec(P), vec(P Ah) = (Ah^T (x) I) vec(P)
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
    for (int blk = 0; blk < n; ++blk) op.block(blk * n, blk * n, n, n) = Ah.transpose();
    for (int bi = 0; bi < n; ++bi)
        for (int bj = 0; bj < n; ++bj) op.block(bi * n, bj * n, n, n) += Ah(bj, bi) * I;
    Eigen::VectorXd q(n * n);
    for (int col = 0; col < n; ++col) q.segment(col * n, n) = -Q.col(col);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(op);
    if (!lu.isInvertible()) throw SingularError("Lyapunov operator is singular");
    const Eigen::VectorXd p = lu.solve(q);
    Eigen::MatrixXd P(n, n);
    for (int col = 0; col < n; ++col) P.col(col) = p.segment(col * n, n);
    return 0.5 * (P + P.transpose());
}

LyapunovWeights lyapunov_weights(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                                 double b_bar, double theta_bar, double c, double eps) {
    LyapunovWeights w;
    const int n = static_cast<int>(P.rows());
    Eigen::VectorXd B = Eigen::VectorXd::Zero(n);
    B(n - 1) = b_bar;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    w.lambda_min_Q = es.eigenvalues().minCoeff();
    if (!(w.lambda_min_Q > 0)) throw SignError("Q must be positive definite");
    const double core = 3.0 * (P * B).squaredNorm() * theta_bar * theta_bar / (c * w.lambda_min_Q);
    w.floor_a1 = std::max(core - eps / c, 0.0);
    w.floor_a2 = core;
    w.a1 = 1.1 * w.floor_a1 + 0.01;
    w.a2 = 1.1 * w.floor_a2 + 0.01;
    return w;
}

namespace {

double trapz_sq(const std::vector<double>& v, double dx) {
    double acc = 0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        acc += 0.5 * dx * (v[i] * v[i] + v[i + 1] * v[i + 1]);
    return acc;
}

}  // namespace

double lyapunov_value(const Eigen::VectorXd& H, const std::vector<double>& v,
                      const std::vector<double>& v_x, double delta, const Eigen::MatrixXd& P,
                      double a1, double a2) {
    const double dx = 1.0 / static_cast<double>(v.size() - 1);
    const double dxg = v_x.empty() ? dx : 1.0 / static_cast<double>(v_x.size());
    double V = H.dot(P * H);
    V += 0.5 * trapz_sq(v, dx);
    double gacc = 0;  // v_x lives on cell midpoints; plain midpoint sum
    for (double g : v_x) gacc += g * g * dxg;
    V += 0.5 * a1 * gacc;
    V += 0.5 * a2 * delta * delta;
    return V;
}

LyapunovSeries lyapunov_series(const TrajectoryLog& log, const KernelTables& tables,
                               const Eigen::MatrixXd& P, const LyapunovWeights& w, double M,
                               int theta_sign, int p_order) {
    LyapunovSeries out;
    out.weights = w;
    const double dt = log.size() > 1 ? log.t[1] - log.t[0] : 1.0;
    for (std::size_t k = 0; k < log.snap_t.size(); ++k) {
        const double t = log.snap_t[k];
        const auto idx = static_cast<std::size_t>(std::llround((t - log.t.front()) / dt));
        if (idx >= log.size()) continue;
        std::vector<double> u = log.snap_u[k];
        u.back() = log.U[idx];  // Dirichlet lag correction
        const std::vector<double> wprof =
            forward_transform(u, log.Y[idx], t, tables, log.snap_p0_derivs[k], p_order);
        const double delta = delta_eval(t, M, tables.c, theta_sign);
        std::vector<double> v(wprof.size());
        for (std::size_t i = 0; i < wprof.size(); ++i) v[i] = wprof[i] - delta;
        const double dx = 1.0 / static_cast<double>(v.size() - 1);
        std::vector<double> vx(v.size() - 1);
        for (std::size_t i = 0; i + 1 < v.size(); ++i) vx[i] = (v[i + 1] - v[i]) / dx;
        out.t.push_back(t);
        out.V.push_back(lyapunov_value(log.h_chain[idx], v, vx, delta, P, w.a1, w.a2));
    }
    return out;
}

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y, double t_start) {
    DecayFit fit;
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start || !(y[i] > 0)) continue;
        const double ly = std::log(y[i]);
        st += t[i];
        sy += ly;
        stt += t[i] * t[i];
        sty += t[i] * ly;
        ++fit.points;
    }
    if (fit.points < 2) return fit;
    const double denom = fit.points * stt - st * st;
    fit.slope = (fit.points * sty - st * sy) / denom;
    fit.intercept = (sy - fit.slope * st) / fit.points;
    return fit;
}

MetricsReport metrics(const TrajectoryLog& log) {
    MetricsReport m;
    m.t = log.t;
    m.sum.resize(log.size());
    m.xi.resize(log.size());
    for (std::size_t k = 0; k < log.size(); ++k) {
        const double ny = log.Y[k].norm();
        m.sum[k] = log.norm_u[k] + log.norm_ux[k] + ny;
        m.xi[k] = log.norm_u[k] * log.norm_u[k] + log.norm_ux[k] * log.norm_ux[k] + ny * ny;
        m.peak = std::max(m.peak, m.sum[k]);
    }
    m.final_ratio = m.peak > 0 ? m.sum.back() / m.peak : 0.0;
    return m;
}

bool MetricsReport::monotone_growth_past(double t_from) const {
    bool any = false;
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (t[k] <= t_from) continue;
        if (sum[k] < sum[k - 1]) return false;
        any = true;
    }
    return any;
}

SafetyReport safety_report(const TrajectoryLog& log, double t_a) {
    SafetyReport r;
    r.t_a = t_a;
    if (log.size() == 0) return r;
    r.safe_start = log.h.front() > 0;
    for (std::size_t k = 0; k < log.size(); ++k) {
        r.min_h_all = std::min(r.min_h_all, log.h[k]);
        r.h_chain_min = std::min(r.h_chain_min, log.h_chain[k].minCoeff());
    }
    if (r.safe_start) {
        r.min_h_applicable = r.min_h_all;
        r.pass = r.min_h_all >= 0;
        return r;
    }
    // first index after which h never goes negative again
    std::size_t k_rec = log.size();
    for (std::size_t k = log.size(); k-- > 0;) {
        if (log.h[k] < 0) break;
        k_rec = k;
    }
    if (k_rec < log.size()) {
        r.recovery_time = log.t[k_rec];
        for (std::size_t k = 0; k < log.size(); ++k)
            if (log.t[k] >= t_a) r.min_h_applicable = std::min(r.min_h_applicable, log.h[k]);
        r.pass = r.recovery_time <= t_a;
    }
    return r;
}

std::vector<double> boundary_identity_gap(const TrajectoryLog& log, const KernelTables& tables,
                                          double M, int theta_sign, int p_order) {
    std::vector<double> gap;
    const double dt = log.size() > 1 ? log.t[1] - log.t[0] : 1.0;
    for (std::size_t k = 0; k < log.snap_t.size(); ++k) {
        const double t = log.snap_t[k];
        const auto idx = static_cast<std::size_t>(std::llround((t - log.t.front()) / dt));
        if (idx >= log.size()) continue;
        std::vector<double> u = log.snap_u[k];
        u.back() = log.U[idx];
        const std::vector<double> w =
            forward_transform(u, log.Y[idx], t, tables, log.snap_p0_derivs[k], p_order);
        gap.push_back(std::abs(w.back() - delta_eval(t, M, tables.c, theta_sign)));
    }
    return gap;
}

}  // namespace parasafe
