#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fharm/grid.hpp"
#include "fharm/integrand.hpp"

namespace fharm {

// Corner c of a cell has offsets (c & 1, c >> 1 & 1, c >> 2 & 1).
int corner_count(int n_dim);
void cell_corners(const GridDomain& d, std::size_t cell, std::size_t* out);

struct Edge {
    int a, b, axis;
};
// edges of the unit cell; 4 (n = 2) or 12 (n = 3)
const std::vector<Edge>& cell_edges(int n_dim);

// Per-cell |grad u|^2: for each axis, the mean over the parallel cell edges of
// |u_b - u_a|^2 / h^2, summed over axes.
std::vector<double> gradient_sq(const SphereMap& u);

enum class CoreTreatment {
    None,
    // Cells whose corner values surround the origin hold a point or line
    // singularity; their energy is taken from the 0-homogeneous extension of
    // the face values about the zero of the trilinear interpolant of the
    // corner values (n = 3 only).
    HomogeneousExtension,
};

struct EnergyField {
    std::vector<double> density;  // F per cell (cell average)
    std::vector<double> gradsq;   // |grad u|^2 per cell (cell average)
    std::vector<std::uint8_t> singular;
};

// Same edge average as gradient_sq with each edge measured by the great-circle
// angle between its end values, which keeps cells next to a singularity from
// being underestimated. The solver energy uses gradient_sq.
EnergyField energy_field(const SphereMap& u, const IntegrandModel& model,
                         CoreTreatment core = CoreTreatment::HomogeneousExtension);
double total_energy(const SphereMap& u, const EnergyField& field);
double total_energy(const SphereMap& u, const IntegrandModel& model,
                    CoreTreatment core = CoreTreatment::HomogeneousExtension);

// true when 0 lies in the convex hull of the points
bool hull_contains_origin(const Vec3* pts, int count);

// u_{x,lambda}(y) = u(x + lambda y) on a unit-ball grid. By default the new
// node spacing is h / lambda on a lattice aligned with the source nodes.
SphereMap blowup(const SphereMap& u, const Vec3& x, double lambda,
                 std::optional<double> spacing = std::nullopt);

void save_map(const SphereMap& u, const std::filesystem::path& path);
// expected_n = 0 accepts either dimension
SphereMap load_map(const std::filesystem::path& path, int expected_n = 0);
std::string map_to_json(const SphereMap& u);

// analytic maps
SphereMap hedgehog_map(const GridDomain& d, const Vec3& center = Vec3::Zero());
// (y1, y2, 0)/|(y1, y2)| about the line through `point` along e3
SphereMap cylinder_map(const GridDomain& d, const Vec3& point = Vec3::Zero());
// (cos k x1, sin k x1) on a 2-D grid
SphereMap circle_map(const GridDomain& d, double k);
SphereMap constant_map(const GridDomain& d, int q, const Vec3& value);
// hedgehog about (-a, 0, 0) glued along x1 = 0 to its mirror image, which is a
// degree -1 point about (a, 0, 0)
SphereMap two_hedgehogs_map(const GridDomain& d, double a);
Vec3 hedgehog_value(const Vec3& y);

}  // namespace fharm
