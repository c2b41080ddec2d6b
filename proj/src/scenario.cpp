#include "parasafe/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace parasafe {

namespace fs = std::filesystem;
using nlohmann::json;

Barrier make_barrier(const BarrierSpec& spec) {
    if (spec.kind == "affine") return Barrier::affine();
    if (spec.kind == "exp_envelope") return Barrier::exp_envelope(spec.a, spec.d);
    throw ConfigError("unknown barrier kind '" + spec.kind + "'");
}

std::function<double(double)> make_u0(const std::string& kind, double amp) {
    if (kind == "zero") return [](double) { return 0.0; };
    if (kind == "poly_sine")
        return [amp](double x) { return amp * x * x * std::sin(4.0 * M_PI * x); };
    if (kind == "cos_half") return [amp](double x) { return amp * std::cos(0.5 * M_PI * x); };
    if (kind == "const") return [amp](double) { return amp; };
    throw ConfigError("unknown initial profile kind '" + kind + "'");
}

namespace {

const json& need(const json& j, const char* key, const std::string& at) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(at + ": missing field '" + key + "'");
    return *it;
}

template <typename T>
T field(const json& j, const char* key, const std::string& at) {
    try {
        return need(j, key, at).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(at + ": bad field '" + key + "': " + e.what());
    }
}

template <typename T>
T field_or(const json& j, const char* key, T def) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    return it->get<T>();
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    Scenario sc;
    sc.echo = j.dump(2);
    sc.name = field_or<std::string>(j, "name", fs::path(origin).stem().string());

    const std::string mode = field_or<std::string>(j, "mode", "adaptive");
    if (mode == "nominal")
        sc.mode = RunMode::Nominal;
    else if (mode == "adaptive")
        sc.mode = RunMode::Adaptive;
    else if (mode == "openloop")
        sc.mode = RunMode::OpenLoop;
    else
        throw ConfigError(origin + ": unknown mode '" + mode + "'");

    const json& jp = need(j, "plant", origin);
    const auto rows = field<std::vector<std::vector<double>>>(jp, "A", origin + ".plant");
    const int n = static_cast<int>(rows.size());
    sc.plant.A.resize(n, n);
    for (int r = 0; r < n; ++r) {
        if (static_cast<int>(rows[r].size()) != n)
            throw ConfigError(origin + ".plant.A: row " + std::to_string(r) + " is not length " +
                              std::to_string(n));
        for (int c = 0; c < n; ++c) sc.plant.A(r, c) = rows[r][c];
    }
    sc.plant.b = field<double>(jp, "b", origin + ".plant");
    sc.plant.eps = field<double>(jp, "eps", origin + ".plant");
    sc.plant.lambda = field<double>(jp, "lambda", origin + ".plant");
    const json& jb = need(jp, "box", origin + ".plant");
    const auto lam = field<std::vector<double>>(jb, "lambda", origin + ".plant.box");
    const auto bb = field<std::vector<double>>(jb, "b", origin + ".plant.box");
    if (lam.size() != 2 || bb.size() != 2)
        throw ConfigError(origin + ".plant.box: intervals need two endpoints");
    sc.plant.box = {lam[0], lam[1], bb[0], bb[1]};

    const json& jg = need(j, "grid", origin);
    sc.grid.nx = field<int>(jg, "nx", origin + ".grid");
    sc.grid.dt = field<double>(jg, "dt", origin + ".grid");
    sc.grid.t_final = field<double>(jg, "t_final", origin + ".grid");

    const json& ji = need(j, "initial", origin);
    const auto y0 = field<std::vector<double>>(ji, "y", origin + ".initial");
    sc.Y0 = Eigen::Map<const Eigen::VectorXd>(y0.data(), static_cast<long>(y0.size()));
    if (ji.contains("u0")) {
        const json& ju = ji["u0"];
        sc.u0_kind = field_or<std::string>(ju, "kind", "poly_sine");
        sc.u0_amp = field_or<double>(ju, "amp", 1.0);
    }

    if (j.contains("barrier")) {
        const json& jbar = j["barrier"];
        sc.barrier.kind = field_or<std::string>(jbar, "kind", "affine");
        sc.barrier.a = field_or<double>(jbar, "a", 0.0);
        sc.barrier.d = field_or<double>(jbar, "d", 0.0);
    }
    if (j.contains("safety")) {
        sc.t_a = field_or<double>(j["safety"], "t_a", 1.0);
        sc.beta = field_or<double>(j["safety"], "beta", 1.0);
    }

    if (j.contains("controller")) {
        const json& jc = j["controller"];
        sc.control.c = field_or<double>(jc, "c", 3.0);
        sc.control.kappas = field_or<std::vector<double>>(jc, "kappas", {});
        sc.control.kappa_margin = field_or<double>(jc, "kappa_margin", 1.0);
        sc.control.M = field_or<double>(jc, "M", 0.0);
        sc.control.piecewise_M = field_or<bool>(jc, "piecewise_M", false);
        sc.control.M_after = field_or<double>(jc, "M_after", 0.0);
        sc.control.series_terms = field_or<int>(jc, "series_terms", 64);
        sc.control.p_order = field_or<int>(jc, "p_order", 10);
        sc.control.table_refine = field_or<int>(jc, "table_refine", 4);
        sc.control.monitor_tM = field_or<bool>(jc, "monitor_tM", true);
    }

    if (j.contains("identifier")) {
        const json& jid = j["identifier"];
        sc.ident.T = field_or<double>(jid, "T", 0.5);
        sc.ident.N_tilde = field_or<int>(jid, "N_tilde", 12);
        sc.ident.modes = field_or<std::vector<int>>(jid, "modes", {1});
        const auto th0 = field_or<std::vector<double>>(jid, "theta0", {});
        if (th0.size() == 2) {
            sc.lambda0 = th0[0];
            sc.b0 = th0[1];
        } else if (!th0.empty()) {
            throw ConfigError(origin + ".identifier.theta0: needs [lambda0, b0]");
        }
    }

    if (j.contains("output")) {
        sc.out_dir = field_or<std::string>(j["output"], "dir", sc.out_dir);
        sc.stride = field_or<int>(j["output"], "stride", sc.stride);
    }

    if (j.contains("acceptance")) {
        const json& ja = j["acceptance"];
        sc.accept.expect = field_or<std::string>(ja, "expect", "safe");
        if (ja.contains("recovery_window")) {
            const auto w = ja["recovery_window"].get<std::vector<double>>();
            if (w.size() != 2) throw ConfigError(origin + ": recovery_window needs [lo, hi]");
            sc.accept.recovery_min = w[0];
            sc.accept.recovery_max = w[1];
        }
        sc.accept.envelope = field_or<bool>(ja, "envelope", false);
        if (ja.contains("ident_tol")) sc.accept.ident_tol = ja["ident_tol"].get<double>();
        if (ja.contains("decay_ratio")) sc.accept.decay_ratio = ja["decay_ratio"].get<double>();
        sc.accept.decay_by = field_or<double>(ja, "decay_by", sc.grid.t_final);
        if (ja.contains("v_slope_max")) sc.accept.v_slope_max = ja["v_slope_max"].get<double>();
        sc.accept.fit_start = field_or<double>(ja, "fit_start", 1.0);
        if (ja.contains("identity_tol")) sc.accept.identity_tol = ja["identity_tol"].get<double>();
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

void Scenario::validate() const {
    plant.validate();
    grid.validate(plant.eps);
    if (Y0.size() != plant.n()) throw ConfigError(name + ": initial.y length != ODE dimension");
    if (stride < 1) throw ConfigError(name + ": output.stride must be >= 1");
    if (!(t_a > 0)) throw ConfigError(name + ": safety.t_a must be positive");
    if (!(beta > 0)) throw ConfigError(name + ": safety.beta must be positive");
    if (!control.kappas.empty() && static_cast<int>(control.kappas.size()) != plant.n())
        throw ConfigError(name + ": controller.kappas length != ODE dimension");
    if (mode != RunMode::OpenLoop && !(control.M > 0))
        throw ConfigError(name + ": controller.M must be positive");
    if (mode == RunMode::Adaptive) {
        const double k = std::round(ident.T / grid.dt);
        if (std::abs(k * grid.dt - ident.T) > 1e-9 * std::max(1.0, ident.T))
            throw ConfigError(name + ": grid.dt does not divide identifier.T");
        if (!plant.box.contains(lambda0, b0))
            throw ConfigError(name + ": identifier.theta0 outside the box");
    }
    const std::string& e = accept.expect;
    if (e != "safe" && e != "recover" && e != "unstable")
        throw ConfigError(name + ": acceptance.expect must be safe|recover|unstable");
}

namespace {

std::string flag_list(bool lam, bool b) {
    if (lam && b) return "lambda,b";
    if (lam) return "lambda";
    if (b) return "b";
    return "none";
}

json cert_json(const Certificate& c) {
    return json{{"i", c.i},
                {"t_i", c.t_i},
                {"mu_i", c.mu_i},
                {"Q1", c.Q1},
                {"Q2", c.Q2},
                {"lambda_hat", c.lambda_hat},
                {"b_hat", c.b_hat},
                {"held", flag_list(c.held_lambda, c.held_b)},
                {"clamped", flag_list(c.clamped_lambda, c.clamped_b)}};
}

double finite_or_null_stub(double v) { return v; }  // json turns NaN into null on dump

}  // namespace

RunResult run_scenario(const Scenario& sc) {
    sc.validate();
    const auto wall0 = std::chrono::steady_clock::now();
    RunResult res;
    res.name = sc.name;
    res.mode = sc.mode;

    const Barrier barrier = make_barrier(sc.barrier);
    const SimState s0 = init_state(make_u0(sc.u0_kind, sc.u0_amp), sc.Y0, sc.grid);
    const double h0 = barrier.value(s0.Y(0), 0.0);
    const SigmaBump sigma(h0, sc.t_a, sc.beta);

    const StructuralTransform tr = build_structural_transform(sc.plant.A, sc.plant.b);
    const Eigen::VectorXd Z0 = tr.Tz * s0.Y;
    Eigen::VectorXd user_kappas;
    if (!sc.control.kappas.empty())
        user_kappas = Eigen::Map<const Eigen::VectorXd>(sc.control.kappas.data(),
                                                        static_cast<long>(sc.control.kappas.size()));
    const GainSelection gains =
        select_kappas(barrier, sigma, Z0, sc.control.c,
                      sc.control.kappas.empty() ? nullptr : &user_kappas, sc.control.kappa_margin);

    const int n = sc.plant.n();
    const int J = sc.control.series_terms;
    const double t1 = sc.ident.T;
    const int theta_sign = barrier.theta() >= 0 ? 1 : -1;

    if (sc.mode == RunMode::OpenLoop) {
        const BarrierChain chain(barrier, sigma, gains.kappas);
        auto extras = [&](double t, const SimState& s) {
            LogExtras e;
            e.h = barrier.value(s.Y(0), t);
            e.h_chain = chain.eval(tr.Tz * s.Y, t);
            e.lambda_hat = sc.plant.lambda;
            e.b_hat = sc.plant.b;
            return e;
        };
        try {
            res.log = run_closed_loop(
                s0, sc.plant, sc.grid, [](double, const SimState&) { return 0.0; }, {},
                sc.stride, extras);
        } catch (const NonFiniteError& e) {
            res.warnings.push_back(std::string("run diverged: ") + e.what());
            res.diverged_at = 0;  // exact step lost; the message carries the time
        }
    } else if (sc.mode == RunMode::Nominal) {
        NominalController ctl(sc.plant, barrier, sigma, gains.kappas, sc.control, sc.grid.nx);
        const std::vector<double> w0 = ctl.law().transform_profile(s0, 0.0);
        const std::vector<double> thac = theta_acute_coeffs(w0, J);
        const double h_n0 = ctl.law().chain().h_i(n, Z0, 0.0);
        res.t_M = find_tM_nominal(h_n0, thac, barrier.theta(), sc.plant.b,
                                  gains.kappas(n - 1), sc.control.c, sc.plant.eps, J,
                                  sc.grid.t_final, sc.grid.dt);
        const MBound mb = m_bound(thac, res.t_M, sc.plant.eps, J);
        res.m_bound_value = mb.bound;
        if (!(sc.control.M > mb.bound))
            throw MValueError("amplitude " + std::to_string(sc.control.M) +
                              " does not exceed the bound " + std::to_string(mb.bound));
        res.r1_true = ctl.law().tables().r.row(sc.grid.nx).dot(s0.Y);
        res.r1_hat0 = res.r1_true;
        auto extras = [&](double t, const SimState& s) { return ctl.extras(t, s); };
        res.log = run_closed_loop(
            s0, sc.plant, sc.grid, [&](double t, const SimState& s) { return ctl(t, s); }, {},
            sc.stride, extras);
        res.kres = kernel_residuals(ctl.law().tables(), sc.plant.A, tr.K);
        const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
        const Eigen::MatrixXd P = solve_lyapunov(make_Ah(gains.kappas), Q);
        const LyapunovWeights w = lyapunov_weights(P, Q, sc.plant.b, std::abs(barrier.theta()),
                                                   sc.control.c, sc.plant.eps);
        const LyapunovSeries vs = lyapunov_series(res.log, ctl.law().tables(), P, w,
                                                  sc.control.M, theta_sign, sc.control.p_order);
        res.vfit = decay_fit(vs.t, vs.V, sc.accept.fit_start);
        const std::vector<double> gaps = boundary_identity_gap(
            res.log, ctl.law().tables(), sc.control.M, theta_sign, sc.control.p_order);
        res.identity_gap = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
    } else {
        AdaptiveController ctl(sc.plant.A, sc.plant.eps, sc.plant.box, barrier, sigma,
                               gains.kappas, sc.control, sc.ident, sc.lambda0, sc.b0, sc.grid.nx,
                               sc.grid.dt, s0);
        const MBranch1 b1 = check_M_initial(sc.control.M, ctl.law(), s0);
        res.excluded_M = b1.excluded;
        res.Ua0 = b1.Ua0;
        if (!b1.ok)
            throw MValueError("amplitude equals the excluded initial value " +
                              std::to_string(b1.excluded));
        res.r1_hat0 = ctl.law().tables().r.row(sc.grid.nx).dot(s0.Y);
        {
            ControlEvaluator truth = ctl.law();
            truth.set_estimate(sc.plant.lambda, sc.plant.b);
            res.r1_true = truth.tables().r.row(sc.grid.nx).dot(s0.Y);
        }
        auto extras = [&](double t, const SimState& s) { return ctl.extras(t, s); };
        std::vector<Tap> taps = {[&ctl](const SimState& s) { return ctl.observe(s); }};
        res.log = run_closed_loop(
            s0, sc.plant, sc.grid, [&](double t, const SimState& s) { return ctl(t, s); }, taps,
            sc.stride, extras);
        res.certs = ctl.identifier().certificates();
        res.t_M = ctl.tM_found() ? ctl.t_M()
                                 : (sc.control.monitor_tM
                                        ? sc.grid.t_final
                                        : std::numeric_limits<double>::quiet_NaN());
        double tM_eff = res.t_M;
        if (std::isnan(tM_eff)) {
            tM_eff = t1;
            res.warnings.push_back("switch-time monitor disabled; tail bound checked at the "
                                   "first trigger time");
        }
        const MBranch2 b2 = check_M_tail(sc.control.M, tM_eff, s0, ctl.law(),
                                         tM_eff < t1 ? &sc.plant.box : nullptr, J);
        res.m_bound_value = b2.bound;
        res.checks.push_back({"amplitude_tail", b2.ok,
                              "M=" + std::to_string(sc.control.M) + " vs bound " +
                                  std::to_string(b2.bound) + " at t_M=" + std::to_string(tM_eff)});
        if (tM_eff < t1)
            res.warnings.push_back("tail bound maximized on box corner+center samples only");
        const int nlast = n;
        const Eigen::VectorXd Kfinal =
            tr.varrho.row(nlast - 1).transpose() / ctl.identifier().b_hat();
        res.kres = kernel_residuals(ctl.law().tables(), sc.plant.A, Kfinal);
        const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
        const Eigen::MatrixXd P = solve_lyapunov(make_Ah(gains.kappas), Q);
        const LyapunovWeights w = lyapunov_weights(P, Q, sc.plant.box.b_max,
                                                   std::abs(barrier.theta()), sc.control.c,
                                                   sc.plant.eps);
        const LyapunovSeries vs = lyapunov_series(res.log, ctl.law().tables(), P, w,
                                                  sc.control.M, theta_sign, sc.control.p_order);
        res.vfit = decay_fit(vs.t, vs.V, sc.accept.fit_start);
        std::vector<double> gaps = boundary_identity_gap(
            res.log, ctl.law().tables(), sc.control.M, theta_sign, sc.control.p_order);
        double g = 0;  // only meaningful once the estimate has settled
        for (std::size_t k = 0; k < gaps.size() && k < res.log.snap_t.size(); ++k)
            if (res.log.snap_t[k] >= t1) g = std::max(g, gaps[k]);
        res.identity_gap = g;
        for (const Certificate& c : res.certs)
            if (c.clamped_lambda || c.clamped_b)
                res.warnings.push_back("estimate clamped to the box at trigger " +
                                       std::to_string(c.i));
    }

    res.safety = safety_report(res.log, sc.t_a);
    res.metric = metrics(res.log);

    auto add = [&](const std::string& nm, bool ok, std::string detail) {
        res.checks.push_back({nm, ok, std::move(detail)});
    };
    char buf[256];

    if (sc.accept.expect == "safe") {
        std::snprintf(buf, sizeof buf, "min h = %.6g (safe start: %s)", res.safety.min_h_all,
                      res.safety.safe_start ? "yes" : "no");
        add("safe", res.safety.safe_start && res.safety.pass, buf);
    } else if (sc.accept.expect == "recover") {
        const double rt = res.safety.recovery_time;
        const bool ok = !std::isnan(rt) && rt >= sc.accept.recovery_min &&
                        rt <= sc.accept.recovery_max && rt <= sc.t_a && !res.safety.safe_start;
        std::snprintf(buf, sizeof buf, "recovery at t = %.4g (window [%.2g, %.2g], t_a = %.2g)",
                      rt, sc.accept.recovery_min, sc.accept.recovery_max, sc.t_a);
        add("recover", ok, buf);
        if (sc.accept.envelope) {
            double mn = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < res.log.size(); ++k)
                if (!std::isnan(rt) && res.log.t[k] >= rt) mn = std::min(mn, res.log.h[k]);
            std::snprintf(buf, sizeof buf, "min h after recovery = %.6g", mn);
            add("envelope", !std::isnan(rt) && mn >= 0, buf);
        }
    } else {  // unstable
        bool grew = !std::isnan(res.diverged_at);
        if (!grew && res.log.size() > 1) {
            grew = true;
            bool past = false;
            for (std::size_t k = 1; k < res.log.size(); ++k) {
                if (res.log.t[k] <= 1.0) continue;
                past = true;
                if (res.log.norm_u[k] < res.log.norm_u[k - 1]) {
                    grew = false;
                    break;
                }
            }
            grew = grew && past;
        }
        std::snprintf(buf, sizeof buf, "field norm growth past t=1: %s, final ||u|| = %.6g",
                      grew ? "monotone" : "no", res.log.norm_u.empty() ? 0.0 : res.log.norm_u.back());
        add("unstable", grew, buf);
    }

    if (sc.accept.ident_tol && sc.mode == RunMode::Adaptive) {
        bool ok = false;
        double el = 1, eb = 1;
        if (!res.certs.empty()) {
            const Certificate& c = res.certs.front();
            el = std::abs(c.lambda_hat - sc.plant.lambda) / std::abs(sc.plant.lambda);
            eb = std::abs(c.b_hat - sc.plant.b) / std::abs(sc.plant.b);
            ok = el <= *sc.accept.ident_tol && eb <= *sc.accept.ident_tol;
        }
        std::snprintf(buf, sizeof buf,
                      "theta_hat(t1) rel errors: lambda %.3g, b %.3g (tol %.3g)", el, eb,
                      *sc.accept.ident_tol);
        add("identification", ok, buf);
    }

    if (sc.accept.decay_ratio) {
        double ratio = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < res.log.size(); ++k)
            if (res.log.t[k] >= sc.accept.decay_by - 1e-12) {
                ratio = res.metric.peak > 0 ? res.metric.sum[k] / res.metric.peak : 0.0;
                break;
            }
        if (std::isinf(ratio) && !res.metric.sum.empty())
            ratio = res.metric.peak > 0 ? res.metric.sum.back() / res.metric.peak : 0.0;
        std::snprintf(buf, sizeof buf, "norm sum at t=%.3g is %.3g of peak (tol %.3g)",
                      sc.accept.decay_by, ratio, *sc.accept.decay_ratio);
        add("decay", ratio <= *sc.accept.decay_ratio, buf);
    }

    if (sc.accept.v_slope_max) {
        std::snprintf(buf, sizeof buf, "log V slope %.4g over t >= %.3g (%d points, max %.3g)",
                      res.vfit.slope, sc.accept.fit_start, res.vfit.points,
                      *sc.accept.v_slope_max);
        add("lyapunov_decay", res.vfit.points >= 2 && res.vfit.slope <= *sc.accept.v_slope_max,
            buf);
    }

    if (sc.accept.identity_tol) {
        std::snprintf(buf, sizeof buf, "transformed boundary gap %.4g (tol %.3g)",
                      res.identity_gap, *sc.accept.identity_tol);
        add("boundary_identity", res.identity_gap <= *sc.accept.identity_tol, buf);
    }

    res.pass = true;
    for (const CheckResult& c : res.checks) res.pass = res.pass && c.pass;

    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

    json rep;
    rep["name"] = sc.name;
    rep["mode"] = sc.mode == RunMode::Nominal    ? "nominal"
                  : sc.mode == RunMode::Adaptive ? "adaptive"
                                                 : "openloop";
    rep["pass"] = res.pass;
    rep["seconds"] = res.seconds;
    rep["checks"] = json::array();
    for (const CheckResult& c : res.checks)
        rep["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    rep["warnings"] = res.warnings;
    rep["safety"] = {{"safe_start", res.safety.safe_start},
                     {"t_a", res.safety.t_a},
                     {"min_h_all", res.safety.min_h_all},
                     {"min_h_applicable", res.safety.min_h_applicable},
                     {"recovery_time", finite_or_null_stub(res.safety.recovery_time)},
                     {"h_chain_min", res.safety.h_chain_min},
                     {"pass", res.safety.pass}};
    rep["metrics"] = {{"peak", res.metric.peak}, {"final_ratio", res.metric.final_ratio}};
    rep["decay"] = {{"slope", res.vfit.slope},
                    {"intercept", res.vfit.intercept},
                    {"points", res.vfit.points},
                    {"fit_start", sc.accept.fit_start}};
    if (res.kres.nx > 0)
        rep["kernel_residuals"] = {{"k_pde", res.kres.k_pde},
                                   {"k_diag", res.kres.k_diag},
                                   {"k_ybc", res.kres.k_ybc},
                                   {"r_ode_fd", res.kres.r_ode_fd},
                                   {"r_ode_exact", res.kres.r_ode_exact},
                                   {"r_init", res.kres.r_init},
                                   {"nx", res.kres.nx},
                                   {"refine", res.kres.refine},
                                   {"iterations", res.kres.iterations},
                                   {"last_increment", res.kres.last_increment}};
    rep["amplitude"] = {{"M", sc.control.M},
                        {"t_M", finite_or_null_stub(res.t_M)},
                        {"bound", finite_or_null_stub(res.m_bound_value)},
                        {"excluded", finite_or_null_stub(res.excluded_M)},
                        {"U_initial", finite_or_null_stub(res.Ua0)}};
    rep["feedback"] = {{"r1_dot_Y0_true", finite_or_null_stub(res.r1_true)},
                       {"r1_dot_Y0_estimate", finite_or_null_stub(res.r1_hat0)}};
    rep["identity_gap"] = finite_or_null_stub(res.identity_gap);
    rep["certificates"] = json::array();
    for (const Certificate& c : res.certs) rep["certificates"].push_back(cert_json(c));
    rep["config"] = json::parse(sc.echo);
    res.report_json = rep.dump(2);
    return res;
}

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    const int n = log.Y.empty() ? 0 : static_cast<int>(log.Y.front().size());
    out << "t";
    for (int i = 1; i <= n; ++i) out << ",y" << i;
    out << ",u0,u1_boundary,U,h";
    for (int i = 1; i <= n; ++i) out << ",h" << i;
    out << ",lambda_hat,b_hat\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        out << ',' << buf;
    };
    for (std::size_t k = 0; k < log.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.10g", log.t[k]);
        out << buf;
        for (int i = 0; i < n; ++i) put(log.Y[k](i));
        put(log.u0[k]);
        put(log.u1[k]);
        put(log.U[k]);
        put(log.h[k]);
        for (int i = 0; i < n; ++i) put(log.h_chain[k](i));
        put(log.lambda_hat[k]);
        put(log.b_hat[k]);
        out << '\n';
    }
}

void write_field_csv(const std::string& path, const TrajectoryLog& log, int nx) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "t";
    char buf[32];
    for (int i = 0; i <= nx; ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", static_cast<double>(i) / nx);
        out << ',' << buf;
    }
    out << '\n';
    for (std::size_t k = 0; k < log.snap_t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.10g", log.snap_t[k]);
        out << buf;
        for (double v : log.snap_u[k]) {
            std::snprintf(buf, sizeof buf, "%.10g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

namespace {

std::mutex print_mutex;

void print_result(const RunResult& r) {
    std::lock_guard<std::mutex> lock(print_mutex);
    std::printf("[scenario %s]\n", r.name.c_str());
    for (const Certificate& c : r.certs)
        std::printf("  cert %d, %.6g, %.6g, %.6g, %.6g, %.10g, %.10g, held=%s, clamped=%s\n",
                    c.i, c.t_i, c.mu_i, c.Q1, c.Q2, c.lambda_hat, c.b_hat,
                    flag_list(c.held_lambda, c.held_b).c_str(),
                    flag_list(c.clamped_lambda, c.clamped_b).c_str());
    for (const CheckResult& c : r.checks)
        std::printf("  [%s] %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
    for (const std::string& w : r.warnings) std::printf("  [warn] %s\n", w.c_str());
    int npass = 0;
    for (const CheckResult& c : r.checks) npass += c.pass;
    std::printf("[%s] %s (%d/%zu checks, %.2f s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                npass, r.checks.size(), r.seconds);
}

RunResult run_one(Scenario sc, const std::string& out_override, int stride_override) {
    if (!out_override.empty())
        sc.out_dir = (fs::path(out_override) / sc.name).string();
    if (stride_override > 0) sc.stride = stride_override;
    RunResult r = run_scenario(sc);
    fs::create_directories(sc.out_dir);
    write_trajectory_csv((fs::path(sc.out_dir) / "trajectory.csv").string(), r.log);
    write_field_csv((fs::path(sc.out_dir) / "field.csv").string(), r.log, sc.grid.nx);
    std::ofstream rep(fs::path(sc.out_dir) / "report.json");
    rep << r.report_json << '\n';
    return r;
}

bool wildcard_match(const char* pat, const char* str) {
    if (*pat == '\0') return *str == '\0';
    if (*pat == '*') return wildcard_match(pat + 1, str) || (*str && wildcard_match(pat, str + 1));
    if (*str == '\0') return false;
    if (*pat == '?' || *pat == *str) return wildcard_match(pat + 1, str + 1);
    return false;
}

}  // namespace

int run_and_report(Scenario sc, const std::string& out_override, int stride_override,
                   bool strict) {
    try {
        const RunResult r = run_one(std::move(sc), out_override, stride_override);
        print_result(r);
        const bool ok = r.pass && (!strict || r.warnings.empty());
        return ok ? 0 : 1;
    } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(print_mutex);
        std::printf("[FAIL] %s: %s\n", sc.name.c_str(), e.what());
        return 2;
    }
}

int sweep(const std::string& pattern, int jobs, const std::string& out_override,
          int stride_override, bool strict) {
    const fs::path pat(pattern);
    fs::path dir = pat.parent_path();
    if (dir.empty()) dir = ".";
    const std::string leaf = pat.filename().string();
    std::vector<std::string> paths;
    if (fs::is_directory(dir))
        for (const auto& ent : fs::directory_iterator(dir))
            if (ent.is_regular_file() &&
                wildcard_match(leaf.c_str(), ent.path().filename().string().c_str()))
                paths.push_back(ent.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw ConfigError("no configs match '" + pattern + "'");

    std::vector<Scenario> scenarios;
    std::vector<std::string> outs;
    for (const std::string& p : paths) {
        Scenario sc = load_scenario(p);
        const std::string resolved = out_override.empty()
                                         ? sc.out_dir
                                         : (fs::path(out_override) / sc.name).string();
        if (std::find(outs.begin(), outs.end(), resolved) != outs.end())
            throw ConfigError("output collision at '" + resolved + "'");
        outs.push_back(resolved);
        scenarios.push_back(std::move(sc));
    }

    if (jobs < 1) jobs = 1;
    std::atomic<std::size_t> next{0};
    std::vector<json> reports(scenarios.size());
    std::vector<int> codes(scenarios.size(), 0);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= scenarios.size()) return;
            try {
                const RunResult r = run_one(scenarios[i], out_override, stride_override);
                print_result(r);
                reports[i] = json::parse(r.report_json);
                codes[i] = (r.pass && (!strict || r.warnings.empty())) ? 0 : 1;
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(print_mutex);
                std::printf("[FAIL] %s: %s\n", scenarios[i].name.c_str(), e.what());
                reports[i] = {{"name", scenarios[i].name}, {"error", e.what()}};
                codes[i] = 2;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs && t < static_cast<int>(scenarios.size()); ++t)
        pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    int exit_code = 0;
    int passed = 0;
    for (int c : codes) {
        exit_code = std::max(exit_code, c);
        passed += c == 0;
    }
    json agg;
    agg["scenarios"] = reports;
    agg["passed"] = passed;
    agg["total"] = static_cast<int>(scenarios.size());
    const fs::path root = out_override.empty() ? fs::path("out") : fs::path(out_override);
    fs::create_directories(root);
    std::ofstream out(root / "sweep.json");
    out << agg.dump(2) << '\n';
    std::printf("[sweep] %d/%zu scenarios passed\n", passed, scenarios.size());
    return exit_code;
}

}  // namespace parasafe
