#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace lattlab {

/// Uniform Cartesian grid on a square [0,side]^2 with Dirichlet walls.
/// Only interior points are stored: x_i = (i+1)*spacing, i in [0, n).
/// Any field value outside the stored points is implicitly zero.
struct Grid2D {
    double side_length = 0.0;
    int points_per_axis = 0;
    double spacing = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    int num_points() const { return points_per_axis * points_per_axis; }
    double x(int ix) const { return origin_x + (ix + 1) * spacing; }
    double y(int iy) const { return origin_y + (iy + 1) * spacing; }
    int index(int ix, int iy) const { return iy * points_per_axis + ix; }

    bool same_as(const Grid2D& o) const {
        return points_per_axis == o.points_per_axis &&
               side_length == o.side_length &&
               origin_x == o.origin_x && origin_y == o.origin_y;
    }
};

inline Grid2D make_grid(double side_length, int points_per_axis) {
    if (!(side_length > 0.0))
        throw std::invalid_argument("make_grid: side_length must be positive, got " +
                                    std::to_string(side_length));
    if (points_per_axis < 8)
        throw std::invalid_argument("make_grid: points_per_axis must be >= 8, got " +
                                    std::to_string(points_per_axis));
    Grid2D g;
    g.side_length = side_length;
    g.points_per_axis = points_per_axis;
    g.spacing = side_length / (points_per_axis + 1);
    return g;
}

/// Real-valued sample of a potential (or any scalar) on a Grid2D.
struct ScalarField {
    Grid2D grid;
    Eigen::VectorXd values;

    ScalarField() = default;
    explicit ScalarField(const Grid2D& g)
        : grid(g), values(Eigen::VectorXd::Zero(g.num_points())) {}
};

/// Real eigenfunction sample on a Grid2D. The Hamiltonian is real-symmetric,
/// so eigenvectors can be chosen real.
struct Wavefunction {
    Grid2D grid;
    Eigen::VectorXd values;

    Wavefunction() = default;
    explicit Wavefunction(const Grid2D& g)
        : grid(g), values(Eigen::VectorXd::Zero(g.num_points())) {}
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b, const char* op) {
    if (!a.same_as(b))
        throw std::invalid_argument(std::string(op) + ": fields live on different grids");
}

/// Midpoint quadrature of f*g over the domain: sum f_i g_i h^2.
inline double inner_product(const Wavefunction& f, const Wavefunction& g) {
    require_same_grid(f.grid, g.grid, "inner_product");
    const double h = f.grid.spacing;
    return f.values.dot(g.values) * h * h;
}

inline double l2_norm(const Wavefunction& f) {
    return f.grid.spacing * f.values.norm();
}

inline Wavefunction normalize(const Wavefunction& psi) {
    const double nrm = l2_norm(psi);
    if (!(nrm > 0.0))
        throw std::invalid_argument("normalize: zero field");
    Wavefunction out = psi;
    out.values /= nrm;
    return out;
}

// ---------------------------------------------------------------------------
// Binary field format "LLF1": magic, u32 points_per_axis, f64 side_length,
// then points_per_axis^2 little-endian f64 values in row-major order.
// ---------------------------------------------------------------------------

inline constexpr char kFieldMagic[4] = {'L', 'L', 'F', '1'};

template <typename FieldT>
void write_field(const std::string& path, const FieldT& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_field: cannot open " + path);
    out.write(kFieldMagic, 4);
    const std::uint32_t n = static_cast<std::uint32_t>(f.grid.points_per_axis);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&f.grid.side_length), sizeof(double));
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(sizeof(double)) * f.values.size());
    if (!out) throw std::runtime_error("write_field: write failed for " + path);
}

template <typename FieldT>
FieldT read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_field: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFieldMagic, 4) != 0)
        throw std::runtime_error("read_field: bad magic in " + path);
    std::uint32_t n = 0;
    double side = 0.0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&side), sizeof side);
    if (!in) throw std::runtime_error("read_field: truncated header in " + path);
    FieldT f(make_grid(side, static_cast<int>(n)));
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(sizeof(double)) * f.values.size());
    if (!in) throw std::runtime_error("read_field: truncated data in " + path);
    return f;
}

}  // namespace lattlab
