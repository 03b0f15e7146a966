#pragma once

// Legacy ASCII VTK export (unstructured grid of hexahedra for the 3D meshes,
// quads for the plate midsurface) with point vector data.

#include "config.hpp"
#include "fine.hpp"

#include <fstream>

namespace homplate {

struct VtkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ofstream vtk_open(const std::string& path, const std::string& title) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw VtkError("cannot open VTK file '" + path + "'");
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    return out;
}

}  // namespace detail

/// Fine mesh with a 3-component nodal field (material elements only).
inline void write_vtk_fine(const std::string& path, const FineMesh& mesh,
                           const Eigen::VectorXd& full, const std::string& name) {
    auto out = detail::vtk_open(path, "thin-plate fine-scale field");
    out << "POINTS " << mesh.n_nodes() << " double\n";
    for (int k = 0; k <= mesh.n3(); ++k)
        for (int j = 0; j <= mesh.n2(); ++j)
            for (int i = 0; i <= mesh.n1(); ++i) {
                const Vec3 x = mesh.node_pos(i, j, k);
                out << format_g17(x[0]) << " " << format_g17(x[1]) << " " << format_g17(x[2])
                    << "\n";
            }
    int n_mat = 0;
    for (int e = 0; e < mesh.n_elements(); ++e)
        if (mesh.element_material(e)) ++n_mat;
    out << "CELLS " << n_mat << " " << 9 * n_mat << "\n";
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const auto nodes = mesh.element_nodes(e);
        out << 8;
        for (int n : nodes) out << " " << n;
        out << "\n";
    }
    out << "CELL_TYPES " << n_mat << "\n";
    for (int e = 0; e < n_mat; ++e) out << "12\n";  // VTK_HEXAHEDRON
    out << "POINT_DATA " << mesh.n_nodes() << "\nVECTORS " << name << " double\n";
    for (int n = 0; n < mesh.n_nodes(); ++n)
        out << format_g17(full[3 * n + 0]) << " " << format_g17(full[3 * n + 1]) << " "
            << format_g17(full[3 * n + 2]) << "\n";
}

/// Plate midsurface with displacement (U1, U2, U3) sampled at bending nodes.
inline void write_vtk_plate(const std::string& path, const PlateMesh& mesh,
                            const Eigen::VectorXd& dofs, const std::string& name) {
    auto out = detail::vtk_open(path, "homogenized plate midsurface");
    const int nx = mesh.nx + 1, ny = mesh.ny + 1;
    out << "POINTS " << nx * ny << " double\n";
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out << format_g17(i * mesh.hx()) << " " << format_g17(j * mesh.hy()) << " 0\n";
    out << "CELLS " << mesh.nx * mesh.ny << " " << 5 * mesh.nx * mesh.ny << "\n";
    for (int j = 0; j < mesh.ny; ++j)
        for (int i = 0; i < mesh.nx; ++i)
            out << "4 " << (i + nx * j) << " " << (i + 1 + nx * j) << " "
                << (i + 1 + nx * (j + 1)) << " " << (i + nx * (j + 1)) << "\n";
    out << "CELL_TYPES " << mesh.nx * mesh.ny << "\n";
    for (int e = 0; e < mesh.nx * mesh.ny; ++e) out << "9\n";  // VTK_QUAD
    out << "POINT_DATA " << nx * ny << "\nVECTORS " << name << " double\n";
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Vec3 u = plate_displacement_at(mesh, dofs, i * mesh.hx(), j * mesh.hy());
            out << format_g17(u[0]) << " " << format_g17(u[1]) << " " << format_g17(u[2])
                << "\n";
        }
}

/// Reference cell with a corrector (or other DOF-space) field at corner nodes.
inline void write_vtk_cell(const std::string& path, const CellMesh& mesh, const DofMap& dofs,
                           const Eigen::VectorXd& field, const std::string& name) {
    auto out = detail::vtk_open(path, "reference cell corrector field");
    const auto& r = mesh.resolution();
    const Vec3 h = mesh.spacing();
    // raw (unglued) corner grid so the periodic seam is drawn on both sides
    const int nx = r[0] + 1, ny = r[1] + 1, nz = r[2] + 1;
    auto raw = [&](int i, int j, int k) { return i + nx * (j + ny * k); };
    out << "POINTS " << nx * ny * nz << " double\n";
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                out << format_g17(i * h[0]) << " " << format_g17(j * h[1]) << " "
                    << format_g17(-1.0 + k * h[2]) << "\n";
    int n_mat = 0;
    for (int e = 0; e < mesh.n_elements(); ++e)
        if (mesh.element_material(e)) ++n_mat;
    out << "CELLS " << n_mat << " " << 9 * n_mat << "\n";
    for (int k = 0; k < r[2]; ++k)
        for (int j = 0; j < r[1]; ++j)
            for (int i = 0; i < r[0]; ++i) {
                if (!mesh.element_material(mesh.element_index(i, j, k))) continue;
                out << "8 " << raw(i, j, k) << " " << raw(i + 1, j, k) << " "
                    << raw(i + 1, j + 1, k) << " " << raw(i, j + 1, k) << " "
                    << raw(i, j, k + 1) << " " << raw(i + 1, j, k + 1) << " "
                    << raw(i + 1, j + 1, k + 1) << " " << raw(i, j + 1, k + 1) << "\n";
            }
    out << "CELL_TYPES " << n_mat << "\n";
    for (int e = 0; e < n_mat; ++e) out << "12\n";
    out << "POINT_DATA " << nx * ny * nz << "\nVECTORS " << name << " double\n";
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int glued = mesh.corner_node(i % r[0], j % r[1], k);
                const int s = dofs.node_sys[static_cast<size_t>(glued)];
                Vec3 v = Vec3::Zero();
                if (s >= 0)
                    for (int c = 0; c < 3; ++c) v[c] = field[3 * s + c];
                out << format_g17(v[0]) << " " << format_g17(v[1]) << " " << format_g17(v[2])
                    << "\n";
            }
}

}  // namespace homplate
