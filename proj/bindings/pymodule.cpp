#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "parasafe/analysis.hpp"
#include "parasafe/barrier.hpp"
#include "parasafe/controller.hpp"
#include "parasafe/identifier.hpp"
#include "parasafe/kernels.hpp"
#include "parasafe/scenario.hpp"
#include "parasafe/series.hpp"

namespace py = pybind11;
using namespace parasafe;

namespace {

py::dict report_dict(const RunResult& r) {
    py::object loads = py::module_::import("json").attr("loads");
    return loads(r.report_json);
}

py::dict run_report(const Scenario& sc) { return report_dict(run_scenario(sc)); }

}  // namespace

PYBIND11_MODULE(parasafe, m) {
    m.doc() = "safe adaptive boundary control of a heat-ODE cascade";

    py::register_exception<Error>(m, "ParasafeError");

    m.def("sigma_bump",
          [](double h0, double t_a, double beta, int order, double t) {
              return SigmaBump(h0, t_a, beta).deriv(order, t);
          },
          py::arg("h0"), py::arg("t_a"), py::arg("beta"), py::arg("order"), py::arg("t"),
          "smooth compensator value or time derivative");

    m.def("delta", &delta_eval, py::arg("t"), py::arg("M"), py::arg("c"),
          py::arg("theta_sign"), "exponentially decaying drive term");

    m.def("alt_theta_sum",
          [](double x, int J) {
              AltSum s = alt_theta_sum(x, J);
              return py::make_tuple(s.value, s.tail);
          },
          py::arg("x"), py::arg("terms") = 64);

    m.def("claim_L", &claim_L, py::arg("x"), py::arg("terms") = 64);

    m.def("safe_drive_check",
          [](double tau, double theta_now, int sign0, double eps, int J) {
              SafeDrive s = safe_drive_check(tau, theta_now, sign0, eps, J);
              return py::make_tuple(s.value, s.tail);
          },
          py::arg("tau"), py::arg("theta_now"), py::arg("theta_sign0"), py::arg("eps"),
          py::arg("terms") = 64);

    m.def("omega", &omega_j, py::arg("j"));

    m.def("fourier_coeffs",
          [](const std::vector<double>& profile, double offset, int J) {
              return py::make_tuple(theta_coeffs(profile, offset, J),
                                    theta_acute_coeffs(profile, J));
          },
          py::arg("profile"), py::arg("offset"), py::arg("terms") = 64,
          "cosine-family coefficients of a sampled profile, with and without the offset");

    m.def("target_w",
          [](double x, double t, const std::vector<double>& thetas, double M, double c,
             int theta_sign, double eps, int J) {
              DriveSignal d = exp_drive(M * theta_sign, c);
              return target_w_eval(x, t, thetas, d, nullptr, J, eps, c);
          },
          py::arg("x"), py::arg("t"), py::arg("thetas"), py::arg("M"), py::arg("c"),
          py::arg("theta_sign"), py::arg("eps"), py::arg("terms") = 64);

    m.def("structural_transform",
          [](const Eigen::MatrixXd& A, double b) {
              StructuralTransform tr = build_structural_transform(A, b);
              return py::make_tuple(tr.Tz, tr.K, tr.Az);
          },
          py::arg("A"), py::arg("b"), "(Tz, K, Az) for a companion pair");

    m.def("select_kappas",
          [](double theta, double h0, double t_a, double beta, const Eigen::VectorXd& Z0,
             double c, double margin) {
              Barrier bar = Barrier::affine();
              if (theta < 0) bar = Barrier::custom(theta, {[](double) { return 0.0; }});
              SigmaBump sig(h0, t_a, beta);
              GainSelection g = select_kappas(bar, sig, Z0, c, nullptr, margin);
              return py::make_tuple(g.kappas, g.kappa_acute);
          },
          py::arg("theta"), py::arg("h0"), py::arg("t_a"), py::arg("beta"), py::arg("Z0"),
          py::arg("c"), py::arg("margin") = 1.0);

    m.def("kernel_tables",
          [](const Eigen::MatrixXd& A, const Eigen::VectorXd& K, double lam, double b, double c,
             double eps, int nx) {
              KernelTables t = build_kernel_tables(A, K, lam, b, c, eps, nx);
              return py::make_tuple(t.k, t.r, t.iterations, t.last_increment);
          },
          py::arg("A"), py::arg("K"), py::arg("lambda_"), py::arg("b"), py::arg("c"),
          py::arg("eps"), py::arg("nx"));

    m.def("kernel_residuals",
          [](const Eigen::MatrixXd& A, const Eigen::VectorXd& K, double lam, double b, double c,
             double eps, int nx) {
              KernelTables t = build_kernel_tables(A, K, lam, b, c, eps, nx);
              KernelResiduals res = kernel_residuals(t, A, K);
              py::dict d;
              d["k_pde"] = res.k_pde;
              d["k_diag"] = res.k_diag;
              d["k_ybc"] = res.k_ybc;
              d["r_ode_fd"] = res.r_ode_fd;
              d["r_ode_exact"] = res.r_ode_exact;
              d["r_init"] = res.r_init;
              return d;
          },
          py::arg("A"), py::arg("K"), py::arg("lambda_"), py::arg("b"), py::arg("c"),
          py::arg("eps"), py::arg("nx"));

    m.def("trigger_schedule",
          [](int i, double T, int N_tilde) {
              Schedule s = trigger_schedule(i, T, N_tilde);
              return py::make_tuple(s.t_i, s.mu_i);
          },
          py::arg("i"), py::arg("T"), py::arg("N_tilde"));

    m.def("update_estimate",
          [](double lambda_prev, double b_prev, double H1, double Q1, double H2, double Q2,
             double lam_min, double lam_max, double b_min, double b_max, double q_tol,
             double ratio_tol) {
              ZGPair zg;
              zg.H1 = {H1};
              zg.Q1 = {Q1};
              zg.H2 = H2;
              zg.Q2 = Q2;
              ThetaBox box{lam_min, lam_max, b_min, b_max};
              EstimateUpdate u = update_estimate(lambda_prev, b_prev, zg, box, q_tol, ratio_tol);
              py::dict d;
              d["lambda_hat"] = u.lambda_hat;
              d["b_hat"] = u.b_hat;
              d["held_lambda"] = u.held_lambda;
              d["held_b"] = u.held_b;
              d["clamped_lambda"] = u.clamped_lambda;
              d["clamped_b"] = u.clamped_b;
              return d;
          },
          py::arg("lambda_prev"), py::arg("b_prev"), py::arg("H1"), py::arg("Q1"),
          py::arg("H2"), py::arg("Q2"), py::arg("lambda_min"), py::arg("lambda_max"),
          py::arg("b_min"), py::arg("b_max"), py::arg("q_tol") = 1e-12,
          py::arg("ratio_tol") = 0.05);

    m.def("solve_lyapunov", &solve_lyapunov, py::arg("Ah"), py::arg("Q"));

    m.def("run_config",
          [](const std::string& path) { return run_report(load_scenario(path)); },
          py::arg("path"), "run a scenario config file, return the report as a dict");

    m.def("run_json",
          [](const std::string& text) {
              return run_report(parse_scenario(text, "<string>"));
          },
          py::arg("text"), "run a scenario given as a JSON string, return the report dict");
}
