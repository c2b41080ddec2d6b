#include "parasafe/barrier.hpp"

#include <cmath>

namespace parasafe {

SigmaBump::SigmaBump(double h0, double t_a, double beta) : h0_(h0), t_a_(t_a), beta_(beta) {
    if (!(t_a > 0)) throw DomainError("sigma bump requires t_a > 0");
    active_ = !(h0 > 0);
    amp_ = std::exp(1.0 / (t_a * t_a)) * (beta - h0);
    pref_.push_back({1.0});
}

const std::vector<double>& SigmaBump::prefactor(int m) const {
    // P_0 = 1; P_{m+1}(y) = -y^2 P_m'(y) + 2 y^3 P_m(y) with y = 1/(t - t_a).
    while (static_cast<int>(pref_.size()) <= m) {
        const auto& P = pref_.back();
        std::vector<double> next(P.size() + 3, 0.0);
        for (std::size_t k = 0; k < P.size(); ++k) {
            if (k >= 1) next[k + 1] -= static_cast<double>(k) * P[k];
            next[k + 3] += 2.0 * P[k];
        }
        pref_.push_back(std::move(next));
    }
    return pref_[m];
}

double SigmaBump::deriv(int m, double t) const {
    if (m < 0) throw OrderError("negative derivative order");
    if (!active_) return 0.0;
    if (t >= t_a_ || t < 0) return 0.0;
    if (t == 0 && m == 0) return beta_ - h0_;  // exact cancel, sigma(0) + h0 = beta
    const double s = t - t_a_;
    const double y = 1.0 / s;
    const double core = std::exp(-y * y);
    if (core == 0.0) return 0.0;  // underflow kills any polynomial prefactor
    const auto& P = prefactor(m);
    double poly = 0.0;
    for (std::size_t k = P.size(); k-- > 0;) poly = poly * y + P[k];
    return amp_ * poly * core;
}

Barrier Barrier::affine() {
    Barrier b;
    b.kind_ = Kind::Affine;
    b.theta_ = 1.0;
    return b;
}

Barrier Barrier::exp_envelope(double a, double d) {
    Barrier b;
    b.kind_ = Kind::ExpEnvelope;
    b.theta_ = -1.0;
    b.a_ = a;
    b.d_ = d;
    return b;
}

Barrier Barrier::custom(double theta, std::vector<std::function<double(double)>> phi_derivs) {
    if (theta == 0) throw SignError("barrier slope theta must be nonzero");
    if (phi_derivs.empty()) throw PartialMissingError("custom barrier needs at least phi itself");
    Barrier b;
    b.kind_ = Kind::Custom;
    b.theta_ = theta;
    b.custom_ = std::move(phi_derivs);
    b.max_order_ = static_cast<int>(b.custom_.size()) - 1;
    return b;
}

double Barrier::phi_deriv(int m, double t) const {
    if (m < 0) throw OrderError("negative derivative order");
    switch (kind_) {
        case Kind::Affine:
            return 0.0;
        case Kind::ExpEnvelope: {
            double v = a_ * std::exp(-d_ * t);
            for (int i = 0; i < m; ++i) v *= -d_;
            return v;
        }
        case Kind::Custom:
            if (m > max_order_)
                throw PartialMissingError("phi^(" + std::to_string(m) + ") not registered");
            return custom_[m](t);
    }
    return 0.0;
}

double Barrier::partial(int ny, int nt, double y1, double t) const {
    if (ny < 0 || nt < 0) throw OrderError("negative partial order");
    if (ny == 0 && nt == 0) return value(y1, t);
    if (ny == 1 && nt == 0) return theta_;
    if (ny >= 1) return 0.0;  // affine in y1: all mixed/higher y1 partials vanish
    return phi_deriv(nt, t);
}

StructuralTransform build_structural_transform(const Eigen::MatrixXd& A, double b) {
    const int n = static_cast<int>(A.rows());
    if (n < 1 || A.cols() != n) throw DimensionError("A must be square");
    if (!(b > 0)) throw SignError("b must be positive");

    // 1-based recursion: vr(i,j) stored at varrho(i-1, j-1), a_{i,j} = A(i-1,j-1).
    Eigen::MatrixXd vr = Eigen::MatrixXd::Zero(n, n);
    auto a = [&](int i, int j) { return A(i - 1, j - 1); };
    vr(0, 0) = a(1, 1);
    for (int i = 2; i <= n; ++i) {
        double s = a(i, 1);
        for (int j = 1; j <= i - 1; ++j) s += vr(i - 2, j - 1) * a(j, 1);
        vr(i - 1, 0) = s;
        for (int l = 2; l <= i - 1; ++l) {
            double v = a(i, l) + vr(i - 2, l - 2);
            for (int j = l; j <= i - 1; ++j) v += vr(i - 2, j - 1) * a(j, l);
            vr(i - 1, l - 1) = v;
        }
        if (i >= 2) vr(i - 1, i - 1) = a(i, i) + vr(i - 2, i - 2);
    }

    StructuralTransform tr;
    tr.varrho = vr;
    tr.Tz = Eigen::MatrixXd::Identity(n, n);
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j) tr.Tz(i, j) = vr(i - 1, j);
    tr.K = vr.row(n - 1).transpose() / b;
    tr.Az = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) tr.Az(i, i + 1) = 1.0;
    tr.BKt = Eigen::MatrixXd::Zero(n, n);
    tr.BKt.row(n - 1) = vr.row(n - 1);
    return tr;
}

Eigen::MatrixXd make_Ah(const Eigen::VectorXd& kappas) {
    const int n = static_cast<int>(kappas.size());
    Eigen::MatrixXd Ah = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        Ah(i, i) = -kappas(i);
        if (i + 1 < n) Ah(i, i + 1) = 1.0;
    }
    return Ah;
}

BarrierChain::BarrierChain(Barrier barrier, SigmaBump sigma, Eigen::VectorXd kappas)
    : barrier_(std::move(barrier)), sigma_(std::move(sigma)), kappas_(std::move(kappas)) {
    const int n = static_cast<int>(kappas_.size());
    if (n < 1) throw DimensionError("need at least one gain");
    C_ = Eigen::MatrixXd::Zero(n, n);
    E_ = Eigen::MatrixXd::Zero(n, n);
    C_(0, 0) = barrier_.theta();
    E_(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const double k = kappas_(i - 1);
        for (int j = 0; j < n; ++j) {
            C_(i, j) = k * C_(i - 1, j) + (j > 0 ? C_(i - 1, j - 1) : 0.0);
            E_(i, j) = k * E_(i - 1, j) + (j > 0 ? E_(i - 1, j - 1) : 0.0);
        }
    }
    q_ = Eigen::VectorXd::Zero(n);
    const double kn = kappas_(n - 1);
    for (int j = 0; j < n; ++j) q_(j) = kn * C_(n - 1, j) + (j > 0 ? C_(n - 1, j - 1) : 0.0);
}

double BarrierChain::phi_sigma(int m, double t) const {
    return barrier_.phi_deriv(m, t) + sigma_.deriv(m, t);
}

double BarrierChain::time_part(int i, int deriv, double t) const {
    double s = 0;
    for (int m = 0; m < i; ++m)
        if (E_(i - 1, m) != 0) s += E_(i - 1, m) * phi_sigma(m + deriv, t);
    return s;
}

double BarrierChain::h_i(int i, const Eigen::VectorXd& Z, double t) const {
    return C_.row(i - 1).head(Z.size()).dot(Z) + time_part(i, 0, t);
}

Eigen::VectorXd BarrierChain::eval(const Eigen::VectorXd& Z, double t) const {
    Eigen::VectorXd H(n());
    for (int i = 1; i <= n(); ++i) H(i - 1) = h_i(i, Z, t);
    return H;
}

double BarrierChain::f_time_part(int r, double t) const {
    const int nn = n();
    const double kn = kappas_(nn - 1);
    double s = 0;
    for (int m = 0; m < nn; ++m)
        if (E_(nn - 1, m) != 0)
            s += E_(nn - 1, m) * (phi_sigma(m + 1 + r, t) + kn * phi_sigma(m + r, t));
    return s;
}

double BarrierChain::f(const Eigen::VectorXd& Z, double t, double b_est) const {
    if (!(b_est > 0)) throw SignError("f needs a positive b estimate");
    return (q_.dot(Z) + f_time_part(0, t)) / b_est;
}

GainSelection select_kappas(const Barrier& barrier, const SigmaBump& sigma,
                            const Eigen::VectorXd& Z0, double c,
                            const Eigen::VectorXd* user_kappas, double margin) {
    const int n = static_cast<int>(Z0.size());
    if (!(c > 0)) throw DomainError("c must be positive");
    if (user_kappas && user_kappas->size() != n)
        throw DimensionError("kappa vector must have length n");

    Eigen::VectorXd kappas(n), acute = Eigen::VectorXd::Zero(n);
    // Incremental build: h_i depends only on kappa_1..kappa_{i-1}. Maintain the
    // affine representation rows directly.
    Eigen::VectorXd C = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd E = Eigen::VectorXd::Zero(n + 1);
    C(0) = barrier.theta();
    E(0) = 1.0;
    auto phi_sigma = [&](int m) { return barrier.phi_deriv(m, 0.0) + sigma.deriv(m, 0.0); };

    for (int i = 1; i <= n; ++i) {
        double hi = C.dot(Z0);
        for (int m = 0; m < i; ++m) hi += E(m) * phi_sigma(m);
        if (!(hi > 0))
            throw GainError("h_" + std::to_string(i) + "(Z0, 0) = " + std::to_string(hi) +
                            " is not positive");
        if (i < n) {
            // kappa_acute_i = (-1/h_i) [ sum_{j<=i} dh_i/dz_j z_{j+1}(0) + dh_i/dt(0) ]
            double drive = 0;
            for (int j = 1; j <= i; ++j) drive += C(j - 1) * Z0(j);  // z_{j+1}(0)
            for (int m = 0; m < i; ++m) drive += E(m) * phi_sigma(m + 1);
            acute(i - 1) = -drive / hi;
            const double lower = std::max(0.0, acute(i - 1));
            if (user_kappas) {
                kappas(i - 1) = (*user_kappas)(i - 1);
                if (!(kappas(i - 1) > lower))
                    throw GainError("kappa_" + std::to_string(i) + " = " +
                                    std::to_string(kappas(i - 1)) + " must exceed " +
                                    std::to_string(lower));
            } else {
                kappas(i - 1) = lower + margin;
            }
            // Advance the affine representation with the chosen gain.
            const double k = kappas(i - 1);
            Eigen::VectorXd Cn = Eigen::VectorXd::Zero(n);
            Eigen::VectorXd En = Eigen::VectorXd::Zero(n + 1);
            for (int j = 0; j < n; ++j) Cn(j) = k * C(j) + (j > 0 ? C(j - 1) : 0.0);
            for (int m = 0; m <= n; ++m) En(m) = k * E(m) + (m > 0 ? E(m - 1) : 0.0);
            C = Cn;
            E = En;
        } else {
            if (user_kappas) {
                kappas(n - 1) = (*user_kappas)(n - 1);
                if (kappas(n - 1) > c)
                    throw GainError("kappa_n = " + std::to_string(kappas(n - 1)) +
                                    " must not exceed c = " + std::to_string(c));
                if (!(kappas(n - 1) > 0)) throw GainError("kappa_n must be positive");
            } else {
                kappas(n - 1) = c;
            }
        }
    }
    return {kappas, acute};
}

}  // namespace parasafe
