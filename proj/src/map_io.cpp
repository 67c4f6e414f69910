#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "fharm/error.hpp"
#include "fharm/fields.hpp"

namespace fharm {

namespace {

template <class T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError("map file truncated");
    return v;
}

}  // namespace

void save_map(const SphereMap& u, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    const auto& d = u.domain();
    os.write("FHM1", 4);
    put<std::int32_t>(os, d.n_dim);
    put<std::int32_t>(os, u.q_dim());
    for (int a = 0; a < 3; ++a) put<std::int32_t>(os, d.dims[a]);
    put<double>(os, d.spacing);
    for (int a = 0; a < 3; ++a) put<double>(os, d.origin[a]);
    put<std::int32_t>(os, d.shape == DomainShape::Ball ? 1 : 0);
    put<double>(os, d.radius);
    for (int a = 0; a < 3; ++a) put<double>(os, d.ball_center[a]);
    for (const Vec3& v : u.values())
        for (int c = 0; c < u.q_dim(); ++c) put<double>(os, v[c]);
    if (!os) throw FormatError("write failed for " + path.string());
}

SphereMap load_map(const std::filesystem::path& path, int expected_n) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FHM1", 4) != 0) throw FormatError("bad magic in " + path.string());
    GridDomain d;
    d.n_dim = get<std::int32_t>(is);
    const int q = get<std::int32_t>(is);
    if (d.n_dim != 2 && d.n_dim != 3) throw FormatError("unsupported dimension in map file");
    if (expected_n != 0 && d.n_dim != expected_n)
        throw DimensionError("map file has dimension " + std::to_string(d.n_dim) + ", expected " +
                             std::to_string(expected_n));
    if (q < 2 || q > 3) throw FormatError("unsupported target dimension in map file");
    for (int a = 0; a < 3; ++a) d.dims[a] = get<std::int32_t>(is);
    d.spacing = get<double>(is);
    for (int a = 0; a < 3; ++a) d.origin[a] = get<double>(is);
    const int shape = get<std::int32_t>(is);
    if (shape != 0 && shape != 1) throw FormatError("unknown domain shape in map file");
    d.shape = shape ? DomainShape::Ball : DomainShape::Box;
    d.radius = get<double>(is);
    for (int a = 0; a < 3; ++a) d.ball_center[a] = get<double>(is);
    try {
        d.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("invalid grid in map file: ") + e.what());
    }
    std::vector<Vec3> vals(d.node_count(), Vec3::Zero());
    for (auto& v : vals) {
        for (int c = 0; c < q; ++c) v[c] = get<double>(is);
        if (!(std::abs(v.norm() - 1.0) <= 1e-9)) throw FormatError("map file holds a non-unit vector");
    }
    return SphereMap(d, q, std::move(vals));
}

std::string map_to_json(const SphereMap& u) {
    const auto& d = u.domain();
    nlohmann::json j;
    j["n"] = d.n_dim;
    j["q"] = u.q_dim();
    j["dims"] = {d.dims[0], d.dims[1], d.dims[2]};
    j["spacing"] = d.spacing;
    j["origin"] = {d.origin[0], d.origin[1], d.origin[2]};
    j["shape"] = d.shape == DomainShape::Ball ? "ball" : "box";
    if (d.shape == DomainShape::Ball) {
        j["radius"] = d.radius;
        j["ball_center"] = {d.ball_center[0], d.ball_center[1], d.ball_center[2]};
    }
    nlohmann::json vals = nlohmann::json::array();
    for (const Vec3& v : u.values()) {
        nlohmann::json e = nlohmann::json::array();
        for (int c = 0; c < u.q_dim(); ++c) e.push_back(v[c]);
        vals.push_back(e);
    }
    j["values"] = vals;
    return j.dump();
}

}  // namespace fharm
