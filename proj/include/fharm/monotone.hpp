#pragma once

#include <cstdint>
#include <vector>

#include "fharm/fields.hpp"
#include "fharm/grid.hpp"
#include "fharm/integrand.hpp"

namespace fharm {

struct MonotoneProfile {
    Vec3 center = Vec3::Zero();
    std::vector<double> radii;  // ascending
    std::vector<double> theta;
    std::vector<double> h;
    std::vector<double> theta_bar;
    std::vector<double> theta_smooth;  // NaN where the mollifier support is under-sampled
    std::vector<double> flux;          // 2 r^{2-n} int_{dB_r} F_p |d_r u|^2
    double smooth_norm = 0.0;          // int psi

    // Piecewise-linear in r. Below the first sampled radius (the resolution
    // floor) the value at the floor is returned; above the last, RangeError.
    double theta_bar_at(double r) const;
};

struct PinchValue {
    double value = 0.0;  // max(raw, 0)
    double raw = 0.0;
};

// Caches the energy field of one map so many (x, r) queries are cheap.
class DensityAnalyzer {
public:
    DensityAnalyzer(const SphereMap& u, const IntegrandModel& model,
                    CoreTreatment core = CoreTreatment::HomogeneousExtension);

    const SphereMap& map() const { return *u_; }
    const IntegrandModel& model() const { return model_; }
    const EnergyField& field() const { return field_; }
    // smallest admissible radius (4 h)
    double min_radius() const { return 4.0 * u_->domain().spacing; }

    // theta(x, r) = r^{2-n} int_{B_r(x)} F; cells cut by the sphere are
    // weighted by 4^n-point subsampling
    double theta(const Vec3& x, double r) const;
    std::vector<double> theta(const Vec3& x, const std::vector<double>& radii) const;
    // h is precomputed per radius by the caller when profiling many centres
    MonotoneProfile profile(const Vec3& x, const std::vector<double>& radii,
                            const std::vector<double>* h_values = nullptr, int flux_dirs = 0,
                            std::uint64_t seed = 1) const;
    double flux(const Vec3& x, double r, int dirs, std::uint64_t seed) const;

private:
    void check(const Vec3& x, double r) const;

    const SphereMap* u_;
    IntegrandModel model_;
    EnergyField field_;
};

double theta(const SphereMap& u, const IntegrandModel& model, const Vec3& x, double r);
// exp(vartheta r / c_e) theta + h(r)
double theta_bar(const SphereMap& u, const IntegrandModel& model, const Vec3& x, double r);
double theta_bar_from(const IntegrandModel& model, double theta_value, double r, double h_value);

// mollifier psi on [0, 1]: 0 near the ends, 1 on [eps, 1 - eps]
double mollifier(double s, double eps);
// Theta~(r) = int Theta_bar(s) psi(s / r) ds / r
double theta_smoothed_at(const MonotoneProfile& p, double r, double eps);
void theta_smoothed(MonotoneProfile& p, double eps);

PinchValue pinch(const MonotoneProfile& p, double r);

struct MonotonicityViolation {
    std::size_t profile = 0;
    std::size_t index = 0;  // between radii[index] and radii[index + 1]
    double increment = 0.0;
};

struct MonotonicityReport {
    std::vector<MonotoneProfile> profiles;
    double Lambda = 0.0;  // largest sampled Theta_bar
    double tol = 0.0;     // 1e-3 Lambda
    std::vector<MonotonicityViolation> violations;
    // Theta_bar increments falling short of the boundary flux by more than tol
    std::vector<MonotonicityViolation> flux_deficits;
    double worst_increment = 0.0;
};

struct MonotonicityOptions {
    int flux_dirs = 1024;
    std::uint64_t seed = 1;
    double tol_factor = 1e-3;
    double mollifier_eps = 0.1;
};

MonotonicityReport monotonicity_report(const SphereMap& u, const IntegrandModel& model,
                                       const std::vector<Vec3>& centers,
                                       const std::vector<double>& radii,
                                       const MonotonicityOptions& opt = {});
MonotonicityReport monotonicity_report(const DensityAnalyzer& an, const std::vector<Vec3>& centers,
                                       const std::vector<double>& radii,
                                       const MonotonicityOptions& opt = {});

std::vector<double> log_spaced(double lo, double hi, int count);

}  // namespace fharm
