#include "parasafe/controller.hpp"

#include <algorithm>
#include <cmath>

namespace parasafe {

double delta_eval(double t, double M, double c, int theta_sign) {
    if (!(M > 0)) throw MValueError("amplitude must be positive");
    return (theta_sign >= 0 ? 1.0 : -1.0) * M * std::exp(-c * t);
}

double solve_p_boundary(const BarrierChain& chain, const Eigen::VectorXd& Z, double t,
                        double b_est) {
    const double theta = chain.barrier().theta();
    if (theta == 0) throw ThetaZeroError("barrier has zero output gradient");
    return -chain.f(Z, t, b_est) / theta;
}

std::vector<double> p_boundary_derivs(const BarrierChain& chain, const StructuralTransform& trans,
                                      const Eigen::MatrixXd& A, double eps, double lambda_est,
                                      double b_est, const SimState& s, double t, int order,
                                      double c) {
    const double theta = chain.barrier().theta();
    if (theta == 0) throw ThetaZeroError("barrier has zero output gradient");
    const int n = static_cast<int>(trans.Tz.rows());
    const Eigen::VectorXd& q = chain.f_state_coeff();

    // Closed trace generator: Az with the last row bent by the feedback that
    // p(0,t) itself applies through u(0,t) + K^T Y = w(0,t) + p(0,t).
    Eigen::MatrixXd gen = trans.Az;
    gen.row(n - 1) -= q.transpose() / theta;

    std::vector<double> out(order + 1);
    Eigen::VectorXd Zm = trans.Tz * s.Y;
    out[0] = -(q.dot(Zm) + chain.f_time_part(0, t)) / (theta * b_est);
    if (order < 1) return out;

    const Eigen::VectorXd Khat = trans.varrho.row(n - 1).transpose() / b_est;
    const double w0 = s.u[0] + Khat.dot(s.Y) - out[0];
    Zm = gen * Zm;
    Zm(n - 1) += b_est * w0 - chain.f_time_part(0, t) / theta;
    out[1] = -(q.dot(Zm) + chain.f_time_part(1, t)) / (theta * b_est);

    // Trace slope from the target equation, w_t(0) = eps w_xx(0) - c w(0),
    // with every piece of w_xx(0) in closed form except the one second
    // difference of u. p_xx(0) = phi_1 / eps needs only out[0..1], which the
    // slope does not feed back into.
    const int nx = static_cast<int>(s.u.size()) - 1;
    const double dx = 1.0 / nx;
    const double uxx0 = 2.0 * (s.u[1] - s.u[0]) / (dx * dx);
    const double kdiag_slope = -(lambda_est + c) / (2.0 * eps);
    const double intk_xx0 = (2.0 * kdiag_slope - Khat(n - 1) * b_est / eps) * s.u[0];
    const Eigen::RowVectorXd rpp0 =
        -Khat.transpose() * (A + c * Eigen::MatrixXd::Identity(n, n)) / eps;
    const double phi1 = out[1] + c * out[0];
    const double W2 = eps * (uxx0 - intk_xx0 - rpp0.dot(s.Y)) - phi1;

    // Beyond the measured value and slope the trace is modeled on the drive:
    // (d/dt + c)^2 w(0,t) = 0, i.e. w0(tau) ~ (w0 + W2 tau) e^{-c tau}.
    double cpow = 1.0;  // (-c)^(m-1)
    for (int m = 1; m < order; ++m) {
        const double wm = -c * cpow * w0 + m * cpow * W2;
        Eigen::VectorXd next = gen * Zm;
        next(n - 1) += b_est * wm - chain.f_time_part(m, t) / theta;
        cpow *= -c;
        Zm = next;
        out[m + 1] = -(q.dot(Zm) + chain.f_time_part(m + 1, t)) / (theta * b_est);
    }
    return out;
}

ControlEvaluator::ControlEvaluator(Eigen::MatrixXd A, double eps, Barrier barrier,
                                   SigmaBump sigma, Eigen::VectorXd kappas, ControllerConfig cfg,
                                   int nx)
    : A_(std::move(A)),
      eps_(eps),
      cfg_(std::move(cfg)),
      nx_(nx),
      theta_sign_(barrier.theta() >= 0 ? 1 : -1),
      trans_(build_structural_transform(A_, 1.0)),
      chain_(std::move(barrier), std::move(sigma), std::move(kappas)) {
    if (chain_.barrier().theta() == 0) throw ThetaZeroError("barrier has zero output gradient");
    if (chain_.kappas()(chain_.n() - 1) > cfg_.c + 1e-12)
        throw GainError("kappa_n exceeds the decay rate c");
}

void ControlEvaluator::set_estimate(double lambda_est, double b_est) {
    if (!(b_est > 0)) throw SignError("b estimate must be positive");
    if (lambda_est == lambda_est_ && b_est == b_est_ && tables_.nx == nx_) return;
    lambda_est_ = lambda_est;
    b_est_ = b_est;
    const int n = static_cast<int>(A_.rows());
    const Eigen::VectorXd Khat = trans_.varrho.row(n - 1).transpose() / b_est;
    tables_ = build_kernel_tables(A_, Khat, lambda_est, b_est, cfg_.c, eps_, nx_,
                                  cfg_.table_refine);
}

std::vector<double> ControlEvaluator::p0_derivs(const SimState& s, double t) const {
    return p_boundary_derivs(chain_, trans_, A_, eps_, lambda_est_, b_est_, s, t,
                             cfg_.p_order, cfg_.c);
}

ControlParts ControlEvaluator::eval(const SimState& s, double t, double amplitude) const {
    if (tables_.nx != nx_) throw ConfigError("evaluator has no estimate set");
    if (static_cast<int>(s.u.size()) != nx_ + 1)
        throw DimensionError("field size does not match the tables");
    ControlParts parts;
    const double dx = 1.0 / nx_;
    for (int j = 0; j <= nx_; ++j) {
        const double wgt = (j == 0 || j == nx_) ? 0.5 : 1.0;
        parts.integral_k += wgt * tables_.k_row1(j) * s.u[j];
    }
    parts.integral_k *= dx;
    parts.rY = tables_.r.row(nx_).dot(s.Y);
    parts.delta = amplitude == 0 ? 0.0 : delta_eval(t, amplitude, cfg_.c, theta_sign_);
    const std::vector<double> d = p0_derivs(s, t);
    const PResult p = solve_p(VectorBoundary(t, d), cfg_.c, eps_, 1.0, t, cfg_.p_order);
    parts.p1 = p.value;
    parts.p1_remainder = p.remainder;
    parts.U = parts.integral_k + parts.rY + parts.delta + parts.p1;
    return parts;
}

LogExtras ControlEvaluator::extras(const SimState& s, double t) const {
    LogExtras e;
    const Eigen::VectorXd Z = trans_.Tz * s.Y;
    e.h = chain_.barrier().value(s.Y(0), t);
    e.h_chain = chain_.eval(Z, t);
    e.lambda_hat = lambda_est_;
    e.b_hat = b_est_;
    e.p0_derivs = p0_derivs(s, t);
    return e;
}

std::vector<double> ControlEvaluator::transform_profile(const SimState& s, double t) const {
    return forward_transform(s.u, s.Y, t, tables_, p0_derivs(s, t), cfg_.p_order);
}

std::vector<double> forward_transform(const std::vector<double>& u, const Eigen::VectorXd& Y,
                                      double t, const KernelTables& tables,
                                      const std::vector<double>& p0_derivs, int p_order) {
    const int nx = tables.nx;
    if (static_cast<int>(u.size()) != nx + 1)
        throw DimensionError("field size does not match the tables");
    const double dx = 1.0 / nx;
    const int order = std::min<int>(p_order, static_cast<int>(p0_derivs.size()) - 1);
    const VectorBoundary q(t, p0_derivs);
    std::vector<double> w(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        double conv = 0;  // int_0^{x_i} k(x_i, y) u(y) dy
        for (int j = 0; j <= i; ++j) {
            const double wgt = (j == 0 || j == i) ? 0.5 : 1.0;
            conv += wgt * tables.k(i, j) * u[j];
        }
        conv *= dx;
        const double p = solve_p(q, tables.c, tables.eps, i * dx, t, order).value;
        w[i] = u[i] - conv - tables.r.row(i).dot(Y) - p;
    }
    return w;
}

std::vector<std::pair<double, double>> box_samples(const ThetaBox& box) {
    const double lm = 0.5 * (box.lambda_min + box.lambda_max);
    const double bm = 0.5 * (box.b_min + box.b_max);
    return {{box.lambda_min, box.b_min}, {box.lambda_min, bm},  {box.lambda_min, box.b_max},
            {lm, box.b_min},             {lm, bm},              {lm, box.b_max},
            {box.lambda_max, box.b_min}, {box.lambda_max, bm},  {box.lambda_max, box.b_max}};
}

namespace {

double numerator_series(const std::vector<double>& thacute, double t, double eps, int J) {
    double acc = 0;
    for (int j = 0; j < J && j < static_cast<int>(thacute.size()); ++j) {
        const double a = eps * omega_j(j) * omega_j(j) * t;
        if (a > 700) break;
        acc += std::exp(-a) * thacute[j];
    }
    return 2.0 * std::abs(acc);
}

}  // namespace

MBound m_bound(const std::vector<double>& theta_acute, double t_M, double eps, int J) {
    if (!(t_M > 0)) throw DenominatorError("switch time must be positive");
    MBound out;
    double den = 0;
    for (int j = 0; j < J; ++j) {
        const double w = omega_j(j);
        den += std::exp(-eps * w * w * t_M) * (j % 2 == 0 ? 1.0 : -1.0) / w;
    }
    out.denominator = 1.0 - 2.0 * den;
    if (!(out.denominator > 0)) throw DenominatorError("amplitude bound denominator not positive");

    // sup over t >= t_M on a log grid; every mode decays monotonically, so once
    // the crude envelope sum_j |thacute_j| e^{-eps w_0^2 t} drops below the
    // best value found the tail cannot win.
    double best = 0, best_t = t_M;
    double l1 = 0;
    for (double v : theta_acute) l1 += std::abs(v);
    for (double t = t_M;; t *= 1.02) {
        const double v = numerator_series(theta_acute, t, eps, J);
        if (v > best) {
            best = v;
            best_t = t;
        }
        const double envelope = 2.0 * l1 * std::exp(-eps * omega_j(0) * omega_j(0) * t);
        if (envelope < best || envelope < 1e-300) break;
    }
    out.numerator = best;
    out.sup_t = best_t;
    out.bound = out.numerator / out.denominator;
    return out;
}

MBound select_M_nominal(const std::vector<double>& w0, double t_M, double eps, int J) {
    return m_bound(theta_acute_coeffs(w0, J), t_M, eps, J);
}

double find_tM_nominal(double h_n0, const std::vector<double>& theta_acute, double theta,
                       double b, double kappa_n, double c, double eps, int J, double t_final,
                       double dt) {
    if (!(h_n0 > 0)) throw DomainError("expression must start positive");
    auto integrand = [&](double tau) {
        double acc = 0;
        for (int j = 0; j < J && j < static_cast<int>(theta_acute.size()); ++j) {
            const double a = eps * omega_j(j) * omega_j(j) * tau;
            if (a > 700) break;
            acc += std::exp(-a) * theta_acute[j];
        }
        return std::exp((kappa_n - c) * tau) * theta * acc;
    };
    double integral = 0, prev = integrand(0.0);
    double t = 0;
    while (t < t_final - 0.5 * dt) {
        const double next = integrand(t + dt);
        integral += 0.5 * dt * (prev + next);
        prev = next;
        t += dt;
        if (h_n0 + 2.0 * b * integral < 0) return t - dt;  // last time still nonneg
    }
    return t_final;
}

MBranch1 check_M_initial(double M, const ControlEvaluator& law, const SimState& s0) {
    MBranch1 out;
    const ControlParts parts = law.eval(s0, 0.0, M);
    out.excluded = (-parts.rY - parts.p1) / law.theta_sign();
    out.Ua0 = parts.U;
    out.ok = M > 0 && M != out.excluded;
    return out;
}

MBranch2 check_M_tail(double M, double t_M, const SimState& s0, const ControlEvaluator& law,
                      const ThetaBox* box, int J) {
    MBranch2 out;
    auto bound_for = [&](const ControlEvaluator& l) {
        const std::vector<double> w0 = l.transform_profile(s0, 0.0);
        return m_bound(theta_acute_coeffs(w0, J), t_M, l.eps(), J).bound;
    };
    if (box == nullptr) {
        out.bound = bound_for(law);
        out.sample_bounds = {out.bound};
    } else {
        for (const auto& [lam, b] : box_samples(*box)) {
            ControlEvaluator cand = law;
            cand.set_estimate(lam, b);
            out.sample_bounds.push_back(bound_for(cand));
            out.bound = std::max(out.bound, out.sample_bounds.back());
        }
    }
    out.ok = M > out.bound;
    return out;
}

MValidation select_M_adaptive(double M, const ControlEvaluator& law, const SimState& s0,
                              double t_M, double t1, const ThetaBox& box, int J) {
    MValidation v;
    v.branch1 = check_M_initial(M, law, s0);
    if (!v.branch1.ok)
        throw MValueError("amplitude hits the excluded initial value " +
                          std::to_string(v.branch1.excluded));
    v.branch2 = check_M_tail(M, t_M, s0, law, t_M < t1 ? &box : nullptr, J);
    if (!v.branch2.ok)
        throw MValueError("amplitude below the tail bound " + std::to_string(v.branch2.bound));
    return v;
}

TMMonitor::TMMonitor(double h_n0, double theta, double kappa_n, double c, double eps, int J,
                     double dt, std::vector<double> b_samples,
                     std::vector<std::vector<double>> theta_acute)
    : h_n0_(h_n0),
      theta_(theta),
      kappa_n_(kappa_n),
      c_(c),
      eps_(eps),
      dt_(dt),
      J_(J),
      b_samples_(std::move(b_samples)),
      thacute_(std::move(theta_acute)) {
    if (!(h_n0 > 0)) throw DomainError("expression must start positive");
    if (b_samples_.size() != thacute_.size())
        throw DimensionError("one coefficient set per box sample required");
    aj_.resize(J_);
    decay_.resize(J_);
    c0_.resize(J_);
    c1_.resize(J_);
    Ej_.assign(J_, 1.0);
    for (int j = 0; j < J_; ++j) {
        const double a = eps_ * omega_j(j) * omega_j(j);
        const double s = a * dt_;
        aj_[j] = a;
        decay_[j] = std::exp(-s);
        // int_{t-dt}^t e^{-a(t-eta)} g(eta) deta with g linear between samples:
        // A0 weights the left endpoint plus A1 shifts mass to the right one;
        // exact for linear g, so the update stays accurate for a dt >> 1 where
        // plain trapezoid overweighs the right endpoint by a factor a dt / 2.
        const double A0 = -std::expm1(-s) / a;
        const double A1 = (-std::expm1(-s) - s * decay_[j]) / (a * s);
        c0_[j] = A0 - A1;
        c1_[j] = A1;
    }
    ecdt_ = std::exp(c_ * dt_);
    ekcdt_ = std::exp((kappa_n_ - c_) * dt_);
    I_.assign(b_samples_.size(), std::vector<double>(J_, 0.0));
    e0_.resize(b_samples_.size());
    gprev_.assign(b_samples_.size(), 0.0);
    integral_.assign(b_samples_.size(), 0.0);
    prev_integrand_.assign(b_samples_.size(), 0.0);
}

double TMMonitor::phi(int s_idx) const {
    return h_n0_ + 2.0 * b_samples_[s_idx] * theta_ * integral_[s_idx];
}

void TMMonitor::advance(const std::vector<double>& e_now) {
    if (triggered_) return;
    if (e_now.size() != b_samples_.size()) throw DimensionError("one error value per sample");
    const double t = step_ * dt_;
    if (step_ == 0) {
        e0_ = e_now;
    } else {
        for (int j = 0; j < J_; ++j) Ej_[j] *= decay_[j];
        ect_ *= ecdt_;
        ekct_ *= ekcdt_;
    }
    for (std::size_t s = 0; s < e_now.size(); ++s) {
        const double gnow = ect_ * e_now[s];
        double series = 0;
        for (int j = 0; j < J_; ++j) {
            if (step_ > 0) I_[s][j] = decay_[j] * I_[s][j] + c0_[j] * gprev_[s] + c1_[j] * gnow;
            const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
            series += Ej_[j] * (thacute_[s][j] + (sgn / omega_j(j)) * e0_[s]) +
                      (sgn / omega_j(j)) * aj_[j] * I_[s][j];
        }
        const double integrand = ekct_ * series;
        if (step_ > 0) integral_[s] += 0.5 * dt_ * (prev_integrand_[s] + integrand);
        prev_integrand_[s] = integrand;
        gprev_[s] = gnow;
    }
    ++step_;
    current_max_ = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < e_now.size(); ++s)
        current_max_ = std::max(current_max_, phi(static_cast<int>(s)));
    if (current_max_ <= 0) {
        triggered_ = true;
        t_M_ = t;
    }
}

NominalController::NominalController(const PlantParams& plant, Barrier barrier, SigmaBump sigma,
                                     Eigen::VectorXd kappas, ControllerConfig cfg, int nx)
    : law_(plant.A, plant.eps, std::move(barrier), std::move(sigma), std::move(kappas),
           std::move(cfg), nx),
      M_(law_.config().M) {
    if (!(M_ > 0)) throw MValueError("amplitude must be positive");
    law_.set_estimate(plant.lambda, plant.b);
}

double NominalController::operator()(double t, const SimState& s) const {
    return law_.eval(s, t, M_).U;
}

ControlParts NominalController::parts(double t, const SimState& s) const {
    return law_.eval(s, t, M_);
}

LogExtras NominalController::extras(double t, const SimState& s) const {
    return law_.extras(s, t);
}

AdaptiveController::AdaptiveController(Eigen::MatrixXd A, double eps, ThetaBox box,
                                       Barrier barrier, SigmaBump sigma, Eigen::VectorXd kappas,
                                       ControllerConfig cfg, IdentifierConfig icfg,
                                       double lambda0, double b0, int nx, double dt,
                                       const SimState& s0)
    : law_(std::move(A), eps, std::move(barrier), std::move(sigma), std::move(kappas), cfg, nx),
      box_(box),
      ident_(std::move(icfg), box, law_.A(), eps, dt, lambda0, b0) {
    if (!(cfg.M > 0)) throw MValueError("amplitude must be positive");
    law_.set_estimate(lambda0, b0);
    if (cfg.monitor_tM) {
        std::vector<double> bs;
        std::vector<std::vector<double>> th;
        for (const auto& [lam, b] : box_samples(box_)) {
            ControlEvaluator cand = law_;
            cand.set_estimate(lam, b);
            bs.push_back(b);
            th.push_back(theta_acute_coeffs(cand.transform_profile(s0, 0.0), cfg.series_terms));
            candidates_.push_back(std::move(cand));
        }
        const Eigen::VectorXd Z0 = law_.transform().Tz * s0.Y;
        const double h_n0 = law_.chain().h_i(law_.chain().n(), Z0, 0.0);
        monitor_ = std::make_unique<TMMonitor>(
            h_n0, law_.chain().barrier().theta(), law_.chain().kappas()(law_.chain().n() - 1),
            cfg.c, eps, cfg.series_terms, dt, std::move(bs), std::move(th));
    }
}

double AdaptiveController::amplitude(double t) const {
    const ControllerConfig& cfg = law_.config();
    if (cfg.piecewise_M && tM_found() && t >= t_M()) return cfg.M_after;
    return cfg.M;
}

double AdaptiveController::t_M() const {
    return monitor_ ? monitor_->t_M() : std::numeric_limits<double>::quiet_NaN();
}

bool AdaptiveController::tM_found() const { return monitor_ && monitor_->triggered(); }

double AdaptiveController::operator()(double t, const SimState& s) const {
    return law_.eval(s, t, amplitude(t)).U;
}

LogExtras AdaptiveController::extras(double t, const SimState& s) const {
    return law_.extras(s, t);
}

bool AdaptiveController::observe(const SimState& s) {
    ident_.append(s.t, s);
    bool retuned = false;
    if (ident_.maybe_update(s.t)) {
        law_.set_estimate(ident_.lambda_hat(), ident_.b_hat());
        ++rebuilds_;
        retuned = true;
    }
    if (monitor_ && !monitor_->triggered()) {
        // delta cancels in e_s = U_s - U_a, so both sides use amplitude 0.
        const double Ua = law_.eval(s, s.t, 0.0).U;
        std::vector<double> e(candidates_.size());
        for (std::size_t i = 0; i < candidates_.size(); ++i)
            e[i] = candidates_[i].eval(s, s.t, 0.0).U - Ua;
        monitor_->advance(e);
    }
    return retuned;
}

}  // namespace parasafe
