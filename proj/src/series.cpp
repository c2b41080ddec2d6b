#include "parasafe/series.hpp"

#include <cmath>

namespace parasafe {

namespace {

double trapz_cos(const std::vector<double>& profile, double offset, double omega) {
    const std::size_t n = profile.size();
    if (n < 2) throw DimensionError("profile needs at least two nodes");
    const double dx = 1.0 / static_cast<double>(n - 1);
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        acc += w * (profile[i] - offset) * std::cos(omega * i * dx);
    }
    return acc * dx;
}

}  // namespace

std::vector<double> theta_coeffs(const std::vector<double>& profile, double offset, int J) {
    std::vector<double> out(J);
    for (int j = 0; j < J; ++j) out[j] = 2.0 * trapz_cos(profile, offset, omega_j(j));
    return out;
}

std::vector<double> theta_acute_coeffs(const std::vector<double>& profile, int J) {
    std::vector<double> out(J);
    for (int j = 0; j < J; ++j) out[j] = trapz_cos(profile, 0.0, omega_j(j));
    return out;
}

double target_w_eval(double x, double t, const std::vector<double>& thetas,
                     const DriveSignal& delta, const DriveSignal* e, int J, double eps, double c,
                     int quad_steps_per_unit_time) {
    if (J > static_cast<int>(thetas.size())) throw DimensionError("fewer thetas than modes");
    if (t < 0) throw DomainError("t must be nonnegative");
    double w = delta.value(t) + (e ? e->value(t) : 0.0);

    auto forcing = [&](double tau) {
        double F = c * delta.value(tau) + delta.deriv(tau);
        if (e) F += c * e->value(tau) + e->deriv(tau);
        return F;
    };
    // delta = M e^{-ct} alone gives F == 0; detect that cheap common case.
    const bool zero_forcing =
        !e && std::abs(forcing(0.0)) <= 1e-14 * (1.0 + std::abs(delta.value(0.0))) &&
        std::abs(forcing(0.5 * t + 0.25)) <= 1e-14 * (1.0 + std::abs(delta.value(0.0)));

    const int steps = std::max(2, static_cast<int>(std::ceil(quad_steps_per_unit_time * t)));
    for (int j = 0; j < J; ++j) {
        const double om = omega_j(j);
        const double a = eps * om * om + c;
        double modal = std::exp(-a * t) * thetas[j];
        if (!zero_forcing && t > 0) {
            // Trapezoid for int_0^t e^{-a(t-tau)} F(tau) dtau.
            const double dt = t / steps;
            double acc = 0.5 * (std::exp(-a * t) * forcing(0.0) + forcing(t));
            for (int s = 1; s < steps; ++s) {
                const double tau = s * dt;
                acc += std::exp(-a * (t - tau)) * forcing(tau);
            }
            const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
            modal -= (2.0 * sgn / om) * acc * dt;
        }
        w += std::cos(om * x) * modal;
    }
    return w;
}

AltSum alt_theta_sum(double x, int J) {
    if (x < 0) throw DomainError("alt_theta_sum needs x >= 0");
    if (J < 1) throw DimensionError("need at least one term");
    AltSum out;
    for (int j = 0; j < J; ++j) {
        const double m = 2.0 * j + 1.0;
        const double term = std::exp(-m * m * x) / m;
        out.value += (j % 2 == 0) ? term : -term;
    }
    const double mt = 2.0 * J + 1.0;
    out.tail = std::exp(-mt * mt * x) / mt;
    return out;
}

double claim_L(double x, int J) { return M_PI / 4.0 - alt_theta_sum(x, J).value; }

SafeDrive safe_drive_check(double tau, double theta_now, int theta_sign0, double eps, int J) {
    if (theta_now == 0) throw ThetaZeroError("theta must be nonzero");
    if (theta_sign0 != 1 && theta_sign0 != -1) throw DomainError("theta_sign0 must be +-1");
    if (tau < 0) throw DomainError("tau must be nonnegative");
    // sum_j e^{-eps omega_j^2 tau} (-1)^j / omega_j = (2/pi) AltSum(eps pi^2 tau / 4).
    const AltSum s = alt_theta_sum(eps * M_PI * M_PI * tau / 4.0, J);
    SafeDrive out;
    const double sign_now = theta_now > 0 ? 1.0 : -1.0;
    out.value = theta_now * (sign_now - (4.0 / M_PI) * theta_sign0 * s.value);
    out.tail = std::abs(theta_now) * (4.0 / M_PI) * s.tail;
    return out;
}

}  // namespace parasafe
