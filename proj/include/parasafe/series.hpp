#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "parasafe/errors.hpp"

namespace parasafe {

// Eigenfunctions of the damped heat target system on [0,1] with a Neumann
// left end and Dirichlet right end: cos(omega_j x), omega_j = pi/2 + j pi.
inline double omega_j(int j) { return M_PI * (0.5 + j); }

// theta_j = 2 int_0^1 (profile - offset) cos(omega_j x) dx  (trapezoid).
std::vector<double> theta_coeffs(const std::vector<double>& profile, double offset, int J);
// acute theta_j = int_0^1 profile cos(omega_j x) dx  (no factor 2, no offset).
std::vector<double> theta_acute_coeffs(const std::vector<double>& profile, int J);

// Boundary drive delta(t) (and optional mismatch e(t)) with one derivative.
struct DriveSignal {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
};
inline DriveSignal exp_drive(double amp, double c) {
    return {[=](double t) { return amp * std::exp(-c * t); },
            [=](double t) { return -c * amp * std::exp(-c * t); }};
}

// Modal solution of w_t = eps w_xx - c w, w_x(0)=0, w(1,t) = delta(t) (+e(t)):
//   w(x,t) = delta + e + sum_j cos(omega_j x) [ e^{-(eps omega_j^2 + c) t} theta_j
//            - (2(-1)^j/omega_j) int_0^t e^{-(eps omega_j^2 + c)(t-tau)} F(tau) dtau ],
// F = c(delta+e) + (delta+e)'. theta_j must be the coefficients of
// w(.,0) - delta(0) - e(0). For delta = M e^{-ct} and e absent F vanishes and
// the integral drops out exactly.
double target_w_eval(double x, double t, const std::vector<double>& thetas,
                     const DriveSignal& delta, const DriveSignal* e, int J, double eps, double c,
                     int quad_steps_per_unit_time = 2000);

// Partial sum and Leibniz tail bound of sum_j (-1)^j e^{-(2j+1)^2 x}/(2j+1).
struct AltSum {
    double value = 0;
    double tail = 0;  // magnitude of the first omitted term
};
AltSum alt_theta_sum(double x, int J);

// L(x) = pi/4 - alt_theta_sum(x): positive, strictly increasing, -> pi/4.
double claim_L(double x, int J);

// S(tau) = theta [ sign(theta) - 2 sign(theta at 0) *
//                  sum_j e^{-eps omega_j^2 tau} (-1)^j / omega_j ]
// via the change of variables x = eps pi^2 tau / 4 mapping the omega_j
// exponents onto the (2j+1)^2 family. Returns S and the propagated tail.
struct SafeDrive {
    double value = 0;
    double tail = 0;
};
SafeDrive safe_drive_check(double tau, double theta_now, int theta_sign0, double eps, int J = 64);

}  // namespace parasafe
