#pragma once

// Assembly and solution of the six cell problems: membrane correctors
// driven by the unit in-plane strain basis {M11, M22, 2 M12} and bending
// correctors driven by the same basis with prefactor -y3. The bending sign
// follows the two-scale strain E^Lin (membrane - y3 * curvature), which
// keeps correctors, homogenized coefficients and the reconstruction
// formula mutually consistent.
//
// The periodic zero-mean space is realized by deflating the three nodal
// translations out of the CG iteration and projecting the volumetric mean
// out of the final solution.

#include "cell.hpp"

#include <Eigen/Sparse>

#include <cstdio>
#include <cstring>
#include <limits>
#include <fstream>
#include <functional>

namespace homplate {

using SpMat = Eigen::SparseMatrix<double>;

/// One of the six cell-problem load modes.
struct CorrectorMode {
    int basis = 0;      // 0,1,2 -> {M11, M22, 2 M12}
    bool bending = false;

    SymMat3 strain(double y3) const {
        SymMat3 s = plane_basis(basis);
        if (bending) s.c *= -y3;
        return s;
    }
};

inline CorrectorMode corrector_mode(int idx) {
    if (idx < 0 || idx > 5) throw std::out_of_range("corrector mode index");
    return CorrectorMode{idx % 3, idx >= 3};
}

namespace detail {

// 6x36 engineering-strain B-matrix for the 12-node cell element.
inline Eigen::Matrix<double, 6, 36> strain_matrix(const std::array<Vec3, 12>& grad,
                                                  const Vec3& h) {
    Eigen::Matrix<double, 6, 36> b = Eigen::Matrix<double, 6, 36>::Zero();
    for (int a = 0; a < 12; ++a) {
        const double dx = grad[a][0] * 2.0 / h[0];
        const double dy = grad[a][1] * 2.0 / h[1];
        const double dz = grad[a][2] * 2.0 / h[2];
        b(0, 3 * a + 0) = dx;
        b(1, 3 * a + 1) = dy;
        b(2, 3 * a + 2) = dz;
        b(3, 3 * a + 1) = dz;
        b(3, 3 * a + 2) = dy;
        b(4, 3 * a + 0) = dz;
        b(4, 3 * a + 2) = dx;
        b(5, 3 * a + 0) = dy;
        b(5, 3 * a + 1) = dx;
    }
    return b;
}

}  // namespace detail

/// Sparse symmetric stiffness over the periodic-glued vector DOFs,
/// entries int_{Y*} 2 a e(phi_i) : e(phi_j) dy.
inline SpMat assemble_cell_stiffness(const CellMesh& mesh, const PhaseAssignment& phases,
                                     const DofMap& dofs) {
    phases.validate_coercive();
    const auto& gauss = detail::cell_gauss();
    const Vec3 h = mesh.spacing();
    const double jac = mesh.element_volume() / 8.0;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.n_material_elements()) * 36 * 36);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const Mat6 ce = phases.hooke(mesh.element_phase(e)).elastic_matrix();
        Eigen::Matrix<double, 36, 36> ke = Eigen::Matrix<double, 36, 36>::Zero();
        for (size_t q = 0; q < gauss.points.size(); ++q) {
            const auto b = detail::strain_matrix(detail::cell_shape_grad(gauss.points[q]), h);
            ke += (gauss.weights[q] * jac) * b.transpose() * ce * b;
        }
        const auto nodes = mesh.element_nodes(e);
        for (int a = 0; a < 12; ++a)
            for (int bn = 0; bn < 12; ++bn)
                for (int ca = 0; ca < 3; ++ca)
                    for (int cb = 0; cb < 3; ++cb)
                        trips.emplace_back(dofs.dof(nodes[a], ca), dofs.dof(nodes[bn], cb),
                                           ke(3 * a + ca, 3 * bn + cb));
    }
    SpMat k(dofs.n_dofs(), dofs.n_dofs());
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
}

/// Load vector for a prescribed strain field: load_i = -int 2 a S(y) : e(phi_i).
inline Eigen::VectorXd cell_load_for(const CellMesh& mesh, const PhaseAssignment& phases,
                                     const DofMap& dofs,
                                     const std::function<SymMat3(const Vec3&)>& prescribed) {
    const auto& gauss = detail::cell_gauss();
    const Vec3 h = mesh.spacing();
    const double jac = mesh.element_volume() / 8.0;
    Eigen::VectorXd load = Eigen::VectorXd::Zero(dofs.n_dofs());
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const Mat6 ce = phases.hooke(mesh.element_phase(e)).elastic_matrix();
        const auto nodes = mesh.element_nodes(e);
        Eigen::Matrix<double, 36, 1> fe = Eigen::Matrix<double, 36, 1>::Zero();
        for (size_t q = 0; q < gauss.points.size(); ++q) {
            const auto b = detail::strain_matrix(detail::cell_shape_grad(gauss.points[q]), h);
            const Vec6 sv = prescribed(mesh.point(e, gauss.points[q])).voigt();
            fe -= (gauss.weights[q] * jac) * (b.transpose() * (ce * sv));
        }
        for (int a = 0; a < 12; ++a)
            for (int c = 0; c < 3; ++c) load[dofs.dof(nodes[a], c)] += fe[3 * a + c];
    }
    return load;
}

inline Eigen::VectorXd corrector_rhs(const CellMesh& mesh, const PhaseAssignment& phases,
                                     const DofMap& dofs, const CorrectorMode& mode) {
    return cell_load_for(mesh, phases, dofs,
                         [&](const Vec3& y) { return mode.strain(y[2]); });
}

struct CgResult {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    double cond_estimate = 0.0;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Remove the three nodal-translation kernel components. Translations are
// constant on corner DOFs and zero on the hierarchical bubbles.
class TranslationDeflator {
  public:
    TranslationDeflator(const CellMesh& mesh, const DofMap& dofs) {
        for (int s = 0; s < dofs.n_sys_nodes; ++s)
            if (dofs.sys_node[static_cast<size_t>(s)] < mesh.n_corner_nodes())
                corner_sys_.push_back(s);
    }

    void project(Eigen::VectorXd& x) const {
        for (int c = 0; c < 3; ++c) {
            double mean = 0.0;
            for (int s : corner_sys_) mean += x[3 * s + c];
            mean /= static_cast<double>(corner_sys_.size());
            for (int s : corner_sys_) x[3 * s + c] -= mean;
        }
    }

  private:
    std::vector<int> corner_sys_;
};

}  // namespace detail

/// Jacobi-preconditioned CG with translation deflation.
inline CgResult deflated_pcg(const SpMat& k, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                             const detail::TranslationDeflator& deflator, double tol,
                             int max_iter) {
    Eigen::VectorXd inv_diag(k.rows());
    for (int i = 0; i < k.rows(); ++i) {
        const double d = k.coeff(i, i);
        inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }
    x.setZero(k.rows());
    Eigen::VectorXd r = b;
    deflator.project(r);
    const double bnorm = r.norm();
    CgResult res;
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Eigen::VectorXd z = inv_diag.asDiagonal() * r;
    deflator.project(z);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    double ray_min = std::numeric_limits<double>::max(), ray_max = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd kp = k * p;
        const double ray = p.dot(kp) / p.squaredNorm();
        ray_min = std::min(ray_min, ray);
        ray_max = std::max(ray_max, ray);
        const double alpha = rz / p.dot(kp);
        x += alpha * p;
        r -= alpha * kp;
        deflator.project(r);
        res.iterations = it + 1;
        res.rel_residual = r.norm() / bnorm;
        if (res.rel_residual <= tol) {
            res.converged = true;
            break;
        }
        z = inv_diag.asDiagonal() * r;
        deflator.project(z);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    res.cond_estimate = ray_min > 0.0 ? ray_max / ray_min : 0.0;
    if (!res.converged)
        throw SolverError("cell CG did not converge: rel_residual=" +
                          std::to_string(res.rel_residual) + " after " +
                          std::to_string(res.iterations) +
                          " iterations, rayleigh-quotient spread " +
                          std::to_string(res.cond_estimate));
    return res;
}

/// The six corrector fields chi^m_{11,22,12}, chi^b_{11,22,12}, stored over
/// the compressed system DOFs, zero-mean per component over Y*.
struct CorrectorSet {
    std::array<Eigen::VectorXd, 6> fields;
    std::array<CgResult, 6> solve_info;
    double tolerance = 0.0;
};

namespace detail {

inline void project_zero_mean(const CellMesh& mesh, const DofMap& dofs, Eigen::VectorXd& x) {
    for (int c = 0; c < 3; ++c) {
        std::vector<double> nodal(static_cast<size_t>(mesh.n_nodes()), 0.0);
        for (int s = 0; s < dofs.n_sys_nodes; ++s)
            nodal[static_cast<size_t>(dofs.sys_node[static_cast<size_t>(s)])] = x[3 * s + c];
        const double mean = mesh.integrate(nodal) / mesh.material_volume();
        for (int s = 0; s < dofs.n_sys_nodes; ++s)
            if (dofs.sys_node[static_cast<size_t>(s)] < mesh.n_corner_nodes())
                x[3 * s + c] -= mean;
    }
}

}  // namespace detail

inline CorrectorSet solve_correctors(const SpMat& k, const CellMesh& mesh,
                                     const PhaseAssignment& phases, const DofMap& dofs,
                                     double tol = 1e-10, int max_iter = 50000) {
    detail::TranslationDeflator deflator(mesh, dofs);
    CorrectorSet set;
    set.tolerance = tol;
    for (int m = 0; m < 6; ++m) {
        const Eigen::VectorXd rhs = corrector_rhs(mesh, phases, dofs, corrector_mode(m));
        Eigen::VectorXd x;
        set.solve_info[static_cast<size_t>(m)] =
            deflated_pcg(k, rhs, x, deflator, tol, max_iter);
        detail::project_zero_mean(mesh, dofs, x);
        set.fields[static_cast<size_t>(m)] = std::move(x);
    }
    return set;
}

/// e_y of a DOF field at a Gauss point of a material element.
inline SymMat3 field_strain(const CellMesh& mesh, const DofMap& dofs,
                            const Eigen::VectorXd& field, int e, const Vec3& xi) {
    const auto grad = detail::cell_shape_grad(xi);
    const Vec3 h = mesh.spacing();
    const auto nodes = mesh.element_nodes(e);
    Mat3 g = Mat3::Zero();
    for (int a = 0; a < 12; ++a) {
        const int s = dofs.node_sys[static_cast<size_t>(nodes[a])];
        if (s < 0) continue;
        const Vec3 gphys(grad[a][0] * 2.0 / h[0], grad[a][1] * 2.0 / h[1],
                         grad[a][2] * 2.0 / h[2]);
        for (int c = 0; c < 3; ++c) g.row(c) += field[3 * s + c] * gphys.transpose();
    }
    return sym(g);
}

/// Value of a DOF field at a local point of an element.
inline Vec3 field_value(const CellMesh& mesh, const DofMap& dofs, const Eigen::VectorXd& field,
                        int e, const Vec3& xi) {
    const auto shp = detail::cell_shape(xi);
    const auto nodes = mesh.element_nodes(e);
    Vec3 v = Vec3::Zero();
    for (int a = 0; a < 12; ++a) {
        const int s = dofs.node_sys[static_cast<size_t>(nodes[a])];
        if (s < 0) continue;
        for (int c = 0; c < 3; ++c) v[c] += shp[a] * field[3 * s + c];
    }
    return v;
}

/// Polarized cell energy int_{Y*} a (Sp + e(up)) : (Sq + e(uq)) dy of two
/// corrected strain fields. Pass a null DOF field for a pure prescribed mode.
inline double cell_energy_pair(const CellMesh& mesh, const PhaseAssignment& phases,
                               const DofMap& dofs,
                               const std::function<SymMat3(const Vec3&)>& sp,
                               const Eigen::VectorXd* up,
                               const std::function<SymMat3(const Vec3&)>& sq,
                               const Eigen::VectorXd* uq) {
    const auto& gauss = detail::cell_gauss();
    const double jac = mesh.element_volume() / 8.0;
    double acc = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const HookeTensor& a = phases.hooke(mesh.element_phase(e));
        for (size_t q = 0; q < gauss.points.size(); ++q) {
            const Vec3 y = mesh.point(e, gauss.points[q]);
            SymMat3 ep = sp(y);
            if (up) ep = ep + field_strain(mesh, dofs, *up, e, gauss.points[q]);
            SymMat3 eq = sq(y);
            if (uq) eq = eq + field_strain(mesh, dofs, *uq, e, gauss.points[q]);
            acc += gauss.weights[q] * jac * a.bilinear(ep, eq);
        }
    }
    return acc;
}

// --- corrector cache (fixed little-endian binary layout) ---------------
//
// Layout: 8-byte magic "HPCORR01", u64 key hash, u32 dof count, then six
// fields of dof-count doubles each, little endian.

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a_str(const std::string& s, uint64_t h = 1469598103934665603ull) {
    return fnv1a(s.data(), s.size(), h);
}

inline bool save_correctors(const std::string& path, uint64_t key, const CorrectorSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out.write("HPCORR01", 8);
    out.write(reinterpret_cast<const char*>(&key), 8);
    const uint32_t n = static_cast<uint32_t>(set.fields[0].size());
    out.write(reinterpret_cast<const char*>(&n), 4);
    for (const auto& f : set.fields)
        out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(8 * n));
    return static_cast<bool>(out);
}

inline std::optional<CorrectorSet> load_correctors(const std::string& path, uint64_t key,
                                                   int expected_dofs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    uint64_t stored_key = 0;
    uint32_t n = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&stored_key), 8);
    in.read(reinterpret_cast<char*>(&n), 4);
    if (!in || std::memcmp(magic, "HPCORR01", 8) != 0 || stored_key != key ||
        n != static_cast<uint32_t>(expected_dofs))
        return std::nullopt;
    CorrectorSet set;
    for (auto& f : set.fields) {
        f.resize(n);
        in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(8 * n));
    }
    if (!in) return std::nullopt;
    return set;
}

}  // namespace homplate
