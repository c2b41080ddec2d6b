#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "parasafe/analysis.hpp"
#include "parasafe/controller.hpp"
#include "parasafe/identifier.hpp"
#include "parasafe/plant.hpp"

namespace parasafe {

enum class RunMode { Nominal, Adaptive, OpenLoop };

struct BarrierSpec {
    std::string kind = "affine";  // affine | exp_envelope
    double a = 0, d = 0;
};
Barrier make_barrier(const BarrierSpec& spec);

// zero | poly_sine (amp x^2 sin(4 pi x)) | cos_half (amp cos(pi x / 2)) | const
std::function<double(double)> make_u0(const std::string& kind, double amp);

// Per-scenario check toggles; a disengaged optional disables the check.
struct AcceptanceSpec {
    std::string expect = "safe";  // safe | recover | unstable
    double recovery_min = 0, recovery_max = 0;
    bool envelope = false;                   // h >= 0 from recovery onward
    std::optional<double> ident_tol;         // relative error of theta_hat(t1)
    std::optional<double> decay_ratio;       // norm sum vs peak ...
    double decay_by = 0;                     // ... at this time
    std::optional<double> v_slope_max;       // log V fit must be <= this
    double fit_start = 1.0;
    std::optional<double> identity_tol;      // transformed boundary vs drive
};

struct Scenario {
    std::string name;
    RunMode mode = RunMode::Adaptive;
    PlantParams plant;
    Grid grid;
    Eigen::VectorXd Y0;
    std::string u0_kind = "poly_sine";
    double u0_amp = 1.0;
    BarrierSpec barrier;
    double t_a = 1.0;
    double beta = 1.0;
    ControllerConfig control;
    IdentifierConfig ident;
    double lambda0 = 0, b0 = 0;  // estimate at t = 0 (adaptive)
    std::string out_dir = "out";
    int stride = 50;
    AcceptanceSpec accept;
    std::string echo;  // original config text, reproduced in the report

    void validate() const;  // ConfigError naming the offending field
};

Scenario parse_scenario(const std::string& json_text, const std::string& origin);
Scenario load_scenario(const std::string& path);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunResult {
    std::string name;
    RunMode mode = RunMode::Adaptive;
    bool pass = false;
    std::vector<CheckResult> checks;
    std::vector<std::string> warnings;

    TrajectoryLog log;
    SafetyReport safety;
    MetricsReport metric;
    DecayFit vfit;
    KernelResiduals kres;
    std::vector<Certificate> certs;
    double t_M = std::numeric_limits<double>::quiet_NaN();
    double m_bound_value = std::numeric_limits<double>::quiet_NaN();
    double excluded_M = std::numeric_limits<double>::quiet_NaN();
    double Ua0 = std::numeric_limits<double>::quiet_NaN();
    double r1_true = std::numeric_limits<double>::quiet_NaN();
    double r1_hat0 = std::numeric_limits<double>::quiet_NaN();
    double identity_gap = std::numeric_limits<double>::quiet_NaN();
    double diverged_at = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0;
    std::string report_json;
};

RunResult run_scenario(const Scenario& sc);

// Runs, writes trajectory.csv / field.csv / report.json under sc.out_dir,
// prints one PASS/FAIL line per check plus the certificate lines; returns the
// process exit code (0 iff everything enabled passed; warnings fail in strict
// mode).
int run_and_report(Scenario sc, const std::string& out_override, int stride_override,
                   bool strict);

// Expands the glob (wildcards in the filename part), runs scenarios on up to
// `jobs` threads, merges reports into <out>/sweep.json.
int sweep(const std::string& pattern, int jobs, const std::string& out_override,
          int stride_override, bool strict);

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);
void write_field_csv(const std::string& path, const TrajectoryLog& log, int nx);

}  // namespace parasafe
