#include "parasafe/identifier.hpp"

#include <cmath>

namespace parasafe {

Schedule trigger_schedule(int i, double T, int N_tilde) {
    if (i < 0 || !(T > 0) || N_tilde < 1) throw DomainError("bad trigger schedule arguments");
    Schedule s;
    s.t_i = i * T;
    s.mu_i = std::max(0, i - N_tilde) * T;
    return s;
}

double mode_integral(const std::vector<double>& u, int nbar) {
    const std::size_t n = u.size();
    if (n < 2) throw DimensionError("field needs at least two nodes");
    const double dx = 1.0 / static_cast<double>(n - 1);
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        acc += w * std::sin(M_PI * nbar * i * dx) * u[i];
    }
    return acc * dx;
}

void SignalLog::append(SignalSample s) {
    if (!samples_.empty() && !(s.t > samples_.back().t)) throw WindowError("non-monotone samples");
    samples_.push_back(std::move(s));
}

int SignalLog::index_of(double t) const {
    const double t0 = samples_.empty() ? 0.0 : samples_.front().t;
    const long idx = std::lround((t - t0) / dt_);
    if (idx < 0 || idx >= size() || std::abs(samples_[idx].t - t) > 0.5 * dt_)
        throw WindowError("time " + std::to_string(t) + " is not a logged sample");
    return static_cast<int>(idx);
}

WindowRegressors build_regressors(const SignalLog& log, double mu, double t_end,
                                  const std::vector<int>& modes, double eps,
                                  const Eigen::MatrixXd& A) {
    const int k0 = log.index_of(mu);
    const int k1 = log.index_of(t_end);
    if (k1 <= k0) throw WindowError("empty identifier window");
    const int n = static_cast<int>(A.rows());
    const Eigen::RowVectorXd arow = A.row(n - 1);
    const double dt = log.dt();
    const int len = k1 - k0 + 1;

    WindowRegressors w;
    w.t.resize(len);
    w.p_b.resize(len);
    w.q_b.resize(len);
    w.p_mode.assign(modes.size(), std::vector<double>(len));
    w.g_mode.assign(modes.size(), std::vector<double>(len));

    double Iu0 = 0, Iu1 = 0, IaY = 0;
    std::vector<double> Im(modes.size(), 0.0);
    const SignalSample& s0 = log.at(k0);
    for (int k = k0; k <= k1; ++k) {
        const SignalSample& s = log.at(k);
        if (k > k0) {
            const SignalSample& sp = log.at(k - 1);
            Iu0 += 0.5 * dt * (sp.u0 + s.u0);
            Iu1 += 0.5 * dt * (sp.u1 + s.u1);
            IaY += 0.5 * dt * (arow.dot(sp.Y) + arow.dot(s.Y));
            for (std::size_t m = 0; m < modes.size(); ++m)
                Im[m] += 0.5 * dt * (sp.modes(m) + s.modes(m));
        }
        const int idx = k - k0;
        w.t[idx] = s.t;
        w.q_b[idx] = Iu0;
        w.p_b[idx] = s.Y(n - 1) - s0.Y(n - 1) - IaY;
        for (std::size_t m = 0; m < modes.size(); ++m) {
            const double pn = M_PI * modes[m];
            const double sgn = (modes[m] % 2 == 0) ? 1.0 : -1.0;
            w.g_mode[m][idx] = Im[m];
            w.p_mode[m][idx] = s.modes(m) - s0.modes(m) + eps * pn * sgn * Iu1 - eps * pn * Iu0 +
                               eps * pn * pn * Im[m];
        }
    }
    return w;
}

ZGPair assemble_ZG(const WindowRegressors& w) {
    const int len = static_cast<int>(w.t.size());
    if (len < 2) throw WindowError("window too short to integrate");
    ZGPair zg;
    zg.H1.assign(w.p_mode.size(), 0.0);
    zg.Q1.assign(w.p_mode.size(), 0.0);
    auto trapz = [&](auto&& f) {
        double acc = 0;
        for (int k = 0; k + 1 < len; ++k)
            acc += 0.5 * (w.t[k + 1] - w.t[k]) * (f(k) + f(k + 1));
        return acc;
    };
    for (std::size_t m = 0; m < w.p_mode.size(); ++m) {
        zg.H1[m] = trapz([&](int k) { return w.p_mode[m][k] * w.g_mode[m][k]; });
        zg.Q1[m] = trapz([&](int k) { return w.g_mode[m][k] * w.g_mode[m][k]; });
    }
    zg.H2 = trapz([&](int k) { return w.p_b[k] * w.q_b[k]; });
    zg.Q2 = trapz([&](int k) { return w.q_b[k] * w.q_b[k]; });
    return zg;
}

EstimateUpdate update_estimate(double lambda_prev, double b_prev, const ZGPair& zg,
                               const ThetaBox& box, double q_tol, double ratio_tol) {
    EstimateUpdate u;
    // lambda from the best-excited mode; cross-check the rest.
    int best = -1;
    for (std::size_t m = 0; m < zg.Q1.size(); ++m)
        if (zg.Q1[m] > q_tol && (best < 0 || zg.Q1[m] > zg.Q1[best])) best = static_cast<int>(m);
    if (best < 0) {
        u.lambda_hat = lambda_prev;
        u.held_lambda = true;
    } else {
        const double ratio = zg.H1[best] / zg.Q1[best];
        for (std::size_t m = 0; m < zg.Q1.size(); ++m) {
            if (static_cast<int>(m) == best || zg.Q1[m] <= q_tol) continue;
            const double other = zg.H1[m] / zg.Q1[m];
            if (std::abs(other - ratio) > ratio_tol * std::max({1.0, std::abs(other), std::abs(ratio)}))
                throw InconsistencyError("mode ratios disagree: " + std::to_string(ratio) +
                                         " vs " + std::to_string(other));
        }
        u.lambda_hat = box.clamp_lambda(ratio);
        u.clamped_lambda = (u.lambda_hat != ratio);
        u.Q1_used = zg.Q1[best];
    }
    if (zg.Q2 > q_tol) {
        const double ratio = zg.H2 / zg.Q2;
        u.b_hat = box.clamp_b(ratio);
        u.clamped_b = (u.b_hat != ratio);
        u.Q2 = zg.Q2;
    } else {
        u.b_hat = b_prev;
        u.held_b = true;
    }
    return u;
}

Identifier::Identifier(IdentifierConfig cfg, ThetaBox box, Eigen::MatrixXd A, double eps,
                       double dt, double lambda0, double b0)
    : cfg_(std::move(cfg)),
      box_(box),
      A_(std::move(A)),
      eps_(eps),
      log_(dt),
      lambda_hat_(lambda0),
      b_hat_(b0) {
    if (!box_.contains(lambda0, b0)) throw BoxError("initial estimate outside the box");
    if (cfg_.modes.empty()) throw DomainError("need at least one identifier mode");
}

void Identifier::append(double t, const SimState& s) {
    SignalSample sm;
    sm.t = t;
    sm.u0 = s.u[0];
    sm.u1 = s.u.back();
    sm.Y = s.Y;
    sm.modes.resize(static_cast<int>(cfg_.modes.size()));
    for (std::size_t m = 0; m < cfg_.modes.size(); ++m)
        sm.modes(m) = mode_integral(s.u, cfg_.modes[m]);
    log_.append(std::move(sm));
}

bool Identifier::maybe_update(double t) {
    const Schedule sc = trigger_schedule(next_trigger_, cfg_.T, cfg_.N_tilde);
    if (t < sc.t_i - 0.5 * log_.dt()) return false;
    const WindowRegressors w = build_regressors(log_, sc.mu_i, sc.t_i, cfg_.modes, eps_, A_);
    const ZGPair zg = assemble_ZG(w);
    const double q_tol = cfg_.q_tol_factor * (sc.t_i - sc.mu_i);
    const EstimateUpdate up =
        update_estimate(lambda_hat_, b_hat_, zg, box_, q_tol, cfg_.ratio_tol);
    lambda_hat_ = up.lambda_hat;
    b_hat_ = up.b_hat;
    certs_.push_back({next_trigger_, sc.t_i, sc.mu_i, up.Q1_used, up.Q2, lambda_hat_, b_hat_,
                      up.held_lambda, up.held_b, up.clamped_lambda, up.clamped_b});
    ++next_trigger_;
    return true;
}

}  // namespace parasafe
