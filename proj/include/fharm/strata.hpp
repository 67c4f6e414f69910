#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fharm/grid.hpp"
#include "fharm/integrand.hpp"
#include "fharm/monotone.hpp"

namespace fharm {

struct ThresholdConfig {
    std::optional<double> eps0;  // detection threshold; model default when absent
    double eps_strat = 0.1;      // symmetry tolerance for strata
    double delta_pinch = 0.5;    // energy drop for drop-balls
    double rho = 0.25;           // covering refinement ratio
    double r0 = 0.1;             // finest scale
    double reifenberg_delta = 0.5;
};

// 0.1 times Theta_bar(0, r0) of the exact hedgehog for this model (n = 3);
// 0.1 * 4 pi for n = 2
double default_eps0(const IntegrandModel& model, double r0);

// ---- symmetry ----

struct SymmetryOptions {
    int plane_candidates = 512;
    int golden_steps = 20;
    int radial_samples = 32;
    int translate_samples = 16;
    int sphere_orbits = 256;  // ray directions for k = 0, n = 3
    int circle_orbits = 64;   // half-plane directions for k = n - 2
};

struct SymmetryDefect {
    int k = 0;
    double ambient = 0.0;    // L2 distance to the best R^q-valued k-symmetric map (lower bound)
    double projected = 0.0;  // same with orbit means projected to the sphere (upper bound)
    Vec3 direction = Vec3::Zero();  // k = 1 axis, or k = n - 1 normal
};

// D^k(x, r) for k = 0..n on the blow-up u_{x,r} (D^n: distance to constants).
// A (k+1)-symmetric map is k-symmetric, so D^k is reported as the min over
// j >= k of the searched values. Throws ResolutionError below 8 samples per
// orbit and DomainError when B_r(x) leaves the domain.
std::vector<SymmetryDefect> symmetry_defects(const SphereMap& u, const Vec3& x, double r,
                                             const SymmetryOptions& opt = {});
SymmetryDefect symmetry_defect(const SphereMap& u, const Vec3& x, double r, int k,
                               const SymmetryOptions& opt = {});

// Defects at x on the dyadic ladder s_j = s_max 2^-j >= s_min.
struct StratumReport {
    Vec3 x = Vec3::Zero();
    int n_dim = 3;
    std::vector<double> scales;
    std::vector<std::vector<SymmetryDefect>> defects;  // [scale][k]
};

StratumReport stratum_report(const SphereMap& u, const Vec3& x, double s_max, double s_min,
                             const SymmetryOptions& opt = {});
// x in S^k_{eps, r}: no ladder scale s in [r, s_max] has D^{k+1}(x, s) <= eps
// (ambient defect, so membership is certified)
bool stratum_membership(const StratumReport& rep, int k, double eps, double r);

// ---- detection ----

struct DetectionResult {
    double eps0 = 0.0;
    std::vector<Vec3> flagged;              // Theta_bar > eps0 at every sampled radius
    std::vector<double> flagged_theta_r0;   // Theta_bar(x, r0)
    std::vector<Vec3> singular;             // flagged local maxima of Theta_bar(., r0)
    std::vector<double> singular_theta_r0;
};

// Candidates are cell centres with B_{r0} inside the domain. radii are the
// sampled radii (ascending, starting at r0); each candidate uses those that fit.
DetectionResult singular_detect(const DensityAnalyzer& an, const ThresholdConfig& cfg,
                                const std::vector<double>& radii);

// Profiles at cell centres through one shared ball stencil per radius; each
// profile keeps the radii whose ball fits. Matches DensityAnalyzer::profile
// without the flux and smoothed columns.
std::vector<MonotoneProfile> cell_profiles(const DensityAnalyzer& an, const std::vector<Vec3>& centres,
                                           const std::vector<double>& radii);

// largest r <= dist(x, boundary) with r^alpha [u]_{alpha, B_r(x)} <= 1
double regularity_scale(const SphereMap& u, const Vec3& x, double alpha, std::uint64_t seed = 1);

// ---- beta numbers, spans, Reifenberg ----

struct MeasureCloud {
    int n_dim = 3;
    std::vector<Vec3> points;
    std::vector<double> weights;
};

// mu = omega_k sum r_x^k delta_x
MeasureCloud discrete_measure(int n_dim, const std::vector<Vec3>& points,
                              const std::vector<double>& radii, int k);
double unit_ball_volume(int k);

struct BetaResult {
    double beta = 0.0;
    Vec3 center = Vec3::Zero();
    std::vector<Vec3> basis;  // best k-plane directions
};

// beta_2^k(x, r)^2 = inf_L r^{-2-k} int_{B_r(x)} d^2(y, L) dmu
BetaResult jones_beta_fit(const MeasureCloud& mu, const Vec3& x, double r, int k);
double jones_beta(const MeasureCloud& mu, const Vec3& x, double r, int k);

struct EffectiveSpan {
    bool spans = false;
    Vec3 origin = Vec3::Zero();
    std::vector<Vec3> basis;
    std::vector<std::size_t> picks;
};

// Greedy farthest-point search for x_0..x_k with x_i outside the 2 rho
// neighbourhood of the span of the earlier picks; every start point is tried.
EffectiveSpan effective_span(int n_dim, const std::vector<Vec3>& points, double rho, int k);

struct ReifenbergResult {
    double value = 0.0;  // int_{B_r(x)} int_{r_min}^r beta^2(y, s) ds/s dmu(y)
    double ratio = 0.0;  // value / r^k
    bool passes = false; // ratio <= delta
};

// s-integral over dyadic octaves, each by Simpson's rule in log s
ReifenbergResult reifenberg_integral(const MeasureCloud& mu, const Vec3& x, double r, int k,
                                     double r_min, double delta);

// ---- covering ----

enum class BallLabel { R0Ball, DropBall };

struct CoverBall {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
    BallLabel label = BallLabel::R0Ball;
    int stage = 0;
};

struct Refinement {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
    int stage = 0;
    std::size_t high_points = 0;  // points still above E - delta at the child scale
    bool spans = false;           // high points rho r-effectively span a k-plane
};

struct CoverResult {
    std::vector<CoverBall> balls;
    std::vector<Refinement> refinements;
    int stages = 0;
    double E = 0.0;
    double sum_rk = 0.0;
};

// Theta_bar(point index, s)
using ThetaBarFn = std::function<double(std::size_t, double)>;

CoverResult covering_refine(int n_dim, const std::vector<Vec3>& points, const ThetaBarFn& theta_bar,
                            double E, const ThresholdConfig& cfg, int k, const Vec3& top_center,
                            double top_radius);
// E = max over points of Theta_bar(y, min(top_radius, profile range))
CoverResult covering_refine(int n_dim, const std::vector<Vec3>& points,
                            const std::vector<MonotoneProfile>& profiles, const ThresholdConfig& cfg,
                            int k, const Vec3& top_center, double top_radius);

struct MinkowskiTable {
    std::vector<double> radii;
    std::vector<double> volume;      // vol(B_r(S) cap B_R(c)) from grid cell centres
    std::vector<double> normalized;  // volume / r^{n-k}
};

MinkowskiTable minkowski_content(const GridDomain& grid, const std::vector<Vec3>& S,
                                 const std::vector<double>& radii, int k,
                                 const Vec3& c = Vec3::Zero(), double R = 1.0);

struct L2ApproxResult {
    bool applicable = false;
    double D0 = 0.0;   // D^0(x, 8r)
    double Dk1 = 0.0;  // D^{k+1}(x, 8r)
    double lhs = 0.0;  // beta^2(x, r)
    double rhs = 0.0;  // r^{-k} int_{B_r(x)} W_r dmu
    double ratio = 0.0;
};

// mu_profiles[i] is the Theta_bar profile at mu.points[i]
L2ApproxResult l2_approx_check(const SphereMap& u, const MeasureCloud& mu,
                               const std::vector<MonotoneProfile>& mu_profiles, const Vec3& x,
                               double r, int k, const ThresholdConfig& cfg,
                               const SymmetryOptions& opt = {});

}  // namespace fharm
