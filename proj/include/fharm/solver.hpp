#pragma once

#include <cstdint>
#include <vector>

#include "fharm/fields.hpp"
#include "fharm/grid.hpp"
#include "fharm/integrand.hpp"

namespace fharm {

enum class BoundaryCondition {
    KeepTrace,  // boundary nodes keep the values of u0
    Hedgehog,   // boundary nodes are reset to x/|x| about the domain centre
};

struct SolveConfig {
    int max_iters = 5000;
    double step0 = 1e-2;
    double backtrack_factor = 0.5;
    double energy_tol = 1e-10;
    double residual_tol = 1e-2;
    BoundaryCondition boundary = BoundaryCondition::KeepTrace;
    // relative decrease is measured over this many iterations
    int window = 5;
};

struct SolveReport {
    SphereMap map;
    int iterations = 0;
    std::vector<double> energy_history;
    // |tangential gradient| / |gradient| at the final iterate
    double final_gradient_ratio = 0.0;
    bool converged = false;
};

// Discrete energy sum over masked cells with the plain edge-difference density.
double discrete_energy(const SphereMap& u, const IntegrandModel& model);
// Same, plus the gradient with respect to every node value (zero on frozen nodes).
double discrete_energy_gradient(const SphereMap& u, const IntegrandModel& model,
                                std::vector<Vec3>& grad);

SolveReport minimize(const SphereMap& u0, const IntegrandModel& model, const SolveConfig& cfg = {});

struct ResidualReport {
    double max = 0.0;
    double mean = 0.0;
    std::vector<double> per_trial;
};

// Weak Euler-Lagrange form int F_p <grad u, grad zeta> - F_p A(u)(grad u, grad u) zeta
// against seeded bump fields zeta tangent to u, each normalized by
// ||zeta||_{H^1} (int_Omega F_p |grad u|^2)^{1/2}. Quadrature at cell centres
// with cell-averaged derivatives; cells holding a singularity are skipped.
ResidualReport el_residual_report(const SphereMap& u, const IntegrandModel& model, int trials,
                                  std::uint64_t seed);
// Inner-variation form int F div X - 2 F_p <d_i u, d_j u> d_i X^j against seeded
// bump vector fields, each normalized by ||T||_{L^1(Omega)} ||grad X||_inf
// with T = F I - 2 F_p (grad u)^T grad u.
ResidualReport stationarity_residual_report(const SphereMap& u, const IntegrandModel& model,
                                            int trials, std::uint64_t seed);
double el_residual(const SphereMap& u, const IntegrandModel& model, int trials = 16,
                   std::uint64_t seed = 1);
double stationarity_residual(const SphereMap& u, const IntegrandModel& model, int trials = 16,
                             std::uint64_t seed = 1);

}  // namespace fharm
