#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace fharm {

using Vec3 = Eigen::Vector3d;

enum class DomainShape { Box, Ball };
enum class NodeKind : std::uint8_t { Interior, Boundary, Outside };

// Uniform node lattice. Values live on nodes; cells are the cubes (squares for
// n = 2) between neighbouring nodes. For n = 2 the third axis has one node and
// the third coordinate is zero.
struct GridDomain {
    int n_dim = 3;
    std::array<int, 3> dims{8, 8, 8};
    double spacing = 1.0;
    Vec3 origin = Vec3::Zero();  // position of node (0, 0, 0)
    DomainShape shape = DomainShape::Box;
    double radius = 0.0;              // Ball only
    Vec3 ball_center = Vec3::Zero();  // Ball only

    // [-half_width, half_width]^n with `nodes` nodes per axis
    static GridDomain centered_box(int n, int nodes, double half_width);
    // ball of `radius` about the origin inside the matching centered box
    static GridDomain ball(int n, int nodes, double radius);

    void validate() const;
    std::size_t node_count() const { return std::size_t(dims[0]) * dims[1] * dims[2]; }
    std::array<int, 3> cell_dims() const;
    std::size_t cell_count() const;
    std::size_t node_index(int i, int j, int k) const { return (std::size_t(i) * dims[1] + j) * dims[2] + k; }
    std::size_t cell_index(int i, int j, int k) const;
    Vec3 node_position(int i, int j, int k) const;
    Vec3 node_position(std::size_t idx) const;
    Vec3 cell_center(int i, int j, int k) const;
    Vec3 cell_center(std::size_t idx) const;
    Vec3 lo() const { return origin; }
    Vec3 hi() const;
    double cell_volume() const;
    bool point_in_shape(const Vec3& x) const;
    // B_r(x) inside the domain (up to tol)
    bool contains_ball(const Vec3& x, double r, double tol = 1e-9) const;
    double distance_to_boundary(const Vec3& x) const;
};

class SphereMap {
public:
    SphereMap() = default;
    // values are renormalized; zero or non-finite vectors are rejected
    SphereMap(GridDomain domain, int q, std::vector<Vec3> values);
    static SphereMap from_function(const GridDomain& domain, int q,
                                   const std::function<Vec3(const Vec3&)>& f);

    const GridDomain& domain() const { return domain_; }
    int q_dim() const { return q_; }
    const std::vector<Vec3>& values() const { return values_; }
    std::vector<Vec3>& values() { return values_; }
    const Vec3& value(std::size_t node) const { return values_[node]; }
    // cells counted by energy sums (Ball: cell centre inside the ball)
    const std::vector<std::uint8_t>& cell_mask() const { return cell_mask_; }
    const std::vector<NodeKind>& node_kind() const { return node_kind_; }
    std::vector<bool> boundary_mask() const;

    // trilinear interpolation and renormalization; positions outside the node
    // box are clamped onto it
    Vec3 sample(const Vec3& x) const;

private:
    void build_topology();

    GridDomain domain_;
    int q_ = 3;
    std::vector<Vec3> values_;
    std::vector<std::uint8_t> cell_mask_;
    std::vector<NodeKind> node_kind_;
};

}  // namespace fharm
