#pragma once

// Discrete periodic unfolding of fine-scale fields onto the product domain
// omega x cell, the Kirchhoff-Love displacement decomposition, and two-scale
// error measurement against the reconstructed limit strain field.
//
// The unfolding re-indexes nodal values cell by cell (x -> ({x'/eps}, x3/eps))
// with no interpolation: FineMesh guarantees the fine and cell grids are
// commensurate, so the identities below hold at quadrature level to roundoff:
//   int_{omega x cell} unfold(psi) dx' dy = (1/eps) int_{Omega_eps} psi dx
//   grad_y unfold(psi) = eps * unfold(grad psi)

#include "fine.hpp"
#include "homogenize.hpp"

namespace homplate {

/// Nodal values on the product grid (macro cells) x (cell grid). Local node
/// (p, q, r) of cell (a, b) duplicates the shared fine node on cell faces so
/// each cell carries a complete grid.
struct UnfoldedField {
    int c1 = 0, c2 = 0;       // macro cell counts
    int m1 = 0, m2 = 0, m3 = 0;  // cell grid elements per direction
    int comps = 0;
    double eps = 0.0;
    Eigen::VectorXd data;

    int nodes_per_cell() const { return (m1 + 1) * (m2 + 1) * (m3 + 1); }
    int index(int a, int b, int p, int q, int r, int c) const {
        const int cell = a + c1 * b;
        const int local = p + (m1 + 1) * (q + (m2 + 1) * r);
        return c + comps * (local + nodes_per_cell() * cell);
    }
    double at(int a, int b, int p, int q, int r, int c) const {
        return data[index(a, b, p, q, r, c)];
    }
};

/// Unfold a fine nodal field (comps values per node, node-major layout).
inline UnfoldedField unfold_nodal(const FineMesh& mesh, const Eigen::VectorXd& full,
                                  int comps) {
    if (comps <= 0 || full.size() != static_cast<Eigen::Index>(comps) * mesh.n_nodes())
        throw std::invalid_argument("unfold_nodal: field size does not match the mesh");
    const auto& m = mesh.cell().resolution();
    UnfoldedField u;
    u.c1 = mesh.n1() / m[0];
    u.c2 = mesh.n2() / m[1];
    u.m1 = m[0];
    u.m2 = m[1];
    u.m3 = m[2];
    u.comps = comps;
    u.eps = mesh.eps();
    u.data.resize(static_cast<Eigen::Index>(comps) * u.nodes_per_cell() * u.c1 * u.c2);
    for (int b = 0; b < u.c2; ++b)
        for (int a = 0; a < u.c1; ++a)
            for (int r = 0; r <= u.m3; ++r)
                for (int q = 0; q <= u.m2; ++q)
                    for (int p = 0; p <= u.m1; ++p) {
                        const int n = mesh.node(a * u.m1 + p, b * u.m2 + q, r);
                        for (int c = 0; c < comps; ++c)
                            u.data[u.index(a, b, p, q, r, c)] = full[comps * n + c];
                    }
    return u;
}

namespace detail {

// per-cell quadrature accumulation over material elements of the cell grid;
// visit(a, b, values-at-8-corners[comp], weight) with weight = eps^2 * jac_y
template <typename Visit>
inline void unfold_quadrature(const UnfoldedField& u, const CellMesh& cell, Visit&& visit) {
    const double jac = (1.0 / u.m1) * (1.0 / u.m2) * (2.0 / u.m3) / 8.0;
    const double w = u.eps * u.eps * jac;
    const auto& gauss = hex_gauss_points();
    std::array<std::array<double, 8>, 8> shp;
    for (size_t g = 0; g < 8; ++g) shp[g] = hex_shape(gauss[g]);
    std::vector<double> corner(static_cast<size_t>(8 * u.comps));
    for (int b = 0; b < u.c2; ++b)
        for (int a = 0; a < u.c1; ++a)
            for (int r = 0; r < u.m3; ++r)
                for (int q = 0; q < u.m2; ++q)
                    for (int p = 0; p < u.m1; ++p) {
                        if (!cell.element_material(cell.element_index(p, q, r))) continue;
                        static const int off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0},
                                                      {0, 1, 0}, {0, 0, 1}, {1, 0, 1},
                                                      {1, 1, 1}, {0, 1, 1}};
                        for (int n = 0; n < 8; ++n)
                            for (int c = 0; c < u.comps; ++c)
                                corner[static_cast<size_t>(u.comps * n + c)] = u.at(
                                    a, b, p + off[n][0], q + off[n][1], r + off[n][2], c);
                        for (size_t g = 0; g < 8; ++g) visit(shp[g], corner, w);
                    }
}

}  // namespace detail

/// int_{omega x cell} of each component (material part of the cell only).
inline Eigen::VectorXd unfold_integral(const UnfoldedField& u, const CellMesh& cell) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(u.comps);
    detail::unfold_quadrature(u, cell,
                              [&](const std::array<double, 8>& shp,
                                  const std::vector<double>& corner, double w) {
                                  for (int c = 0; c < u.comps; ++c) {
                                      double v = 0.0;
                                      for (int n = 0; n < 8; ++n)
                                          v += shp[static_cast<size_t>(n)] *
                                               corner[static_cast<size_t>(u.comps * n + c)];
                                      acc[c] += w * v;
                                  }
                              });
    return acc;
}

/// squared L2(omega x cell) norm summed over components.
inline double unfold_norm_sq(const UnfoldedField& u, const CellMesh& cell) {
    double acc = 0.0;
    detail::unfold_quadrature(u, cell,
                              [&](const std::array<double, 8>& shp,
                                  const std::vector<double>& corner, double w) {
                                  for (int c = 0; c < u.comps; ++c) {
                                      double v = 0.0;
                                      for (int n = 0; n < 8; ++n)
                                          v += shp[static_cast<size_t>(n)] *
                                               corner[static_cast<size_t>(u.comps * n + c)];
                                      acc += w * v * v;
                                  }
                              });
    return acc;
}

/// Fine-side companions with the matching quadrature (material elements).
inline Eigen::VectorXd fine_nodal_integral(const FineMesh& mesh, const Eigen::VectorXd& full,
                                           int comps) {
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(comps);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const auto nodes = mesh.element_nodes(e);
        for (size_t g = 0; g < 8; ++g) {
            const auto shp = detail::hex_shape(gauss[g]);
            for (int c = 0; c < comps; ++c) {
                double v = 0.0;
                for (int n = 0; n < 8; ++n)
                    v += shp[static_cast<size_t>(n)] * full[comps * nodes[n] + c];
                acc[c] += jac * v;
            }
        }
    }
    return acc;
}

inline double fine_nodal_norm_sq(const FineMesh& mesh, const Eigen::VectorXd& full,
                                 int comps) {
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();
    double acc = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const auto nodes = mesh.element_nodes(e);
        for (size_t g = 0; g < 8; ++g) {
            const auto shp = detail::hex_shape(gauss[g]);
            for (int c = 0; c < comps; ++c) {
                double v = 0.0;
                for (int n = 0; n < 8; ++n)
                    v += shp[static_cast<size_t>(n)] * full[comps * nodes[n] + c];
                acc += jac * v * v;
            }
        }
    }
    return acc;
}

/// Max discrepancy |grad_y unfold(psi) - eps * unfold(grad psi)| over Gauss
/// points; both sides are evaluated independently from the nodal data.
inline double unfold_gradient_identity(const FineMesh& mesh, const Eigen::VectorXd& full,
                                       int comps) {
    const UnfoldedField u = unfold_nodal(mesh, full, comps);
    const auto& gauss = detail::hex_gauss_points();
    const Vec3 hx = mesh.spacing();
    const Vec3 hy(1.0 / u.m1, 1.0 / u.m2, 2.0 / u.m3);
    double worst = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const auto [i, j, k] = mesh.element_ijk(e);
        const int a = i / u.m1, b = j / u.m2;
        const int p = i % u.m1, q = j % u.m2, r = k;
        const auto nodes = mesh.element_nodes(e);
        static const int off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                      {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
        for (size_t g = 0; g < 8; ++g) {
            const auto grad = detail::hex_shape_grad(gauss[g]);
            for (int c = 0; c < comps; ++c) {
                Vec3 gy = Vec3::Zero();  // grad_y of the unfolded field
                Vec3 gx = Vec3::Zero();  // grad_x of the fine field
                for (int n = 0; n < 8; ++n) {
                    const double uy =
                        u.at(a, b, p + off[n][0], q + off[n][1], r + off[n][2], c);
                    const double ux = full[comps * nodes[n] + c];
                    for (int d = 0; d < 3; ++d) {
                        gy[d] += uy * grad[static_cast<size_t>(n)][d] * 2.0 / hy[d];
                        gx[d] += ux * grad[static_cast<size_t>(n)][d] * 2.0 / hx[d];
                    }
                }
                worst = std::max(worst, (gy - mesh.eps() * gx).cwiseAbs().maxCoeff());
            }
        }
    }
    return worst;
}

// --- Kirchhoff-Love decomposition -------------------------------------------

/// u = U_KL + residual with U_KL = (U_alpha - x3 d_alpha U3, U3) built from
/// thickness averages; derivatives of the averaged deflection by second-order
/// finite differences on the midsurface grid.
struct KLDecomposition {
    Eigen::VectorXd mid;       // (U1, U2, U3) per midsurface node
    Eigen::VectorXd u_kl;      // 3 * n_nodes
    Eigen::VectorXd residual;  // 3 * n_nodes
    double norm_residual = 0.0;
    double norm_grad_residual = 0.0;
    double norm_strain = 0.0;  // |e(u)| of the input field
};

inline KLDecomposition kl_decompose(const FineMesh& mesh, const Eigen::VectorXd& full) {
    const int nx = mesh.n1() + 1, ny = mesh.n2() + 1, nz = mesh.n3() + 1;
    KLDecomposition d;
    d.mid = Eigen::VectorXd::Zero(3 * nx * ny);
    auto midx = [&](int i, int j) { return i + nx * j; };

    // thickness averages by the trapezoid rule (exact mean of the nodal grid)
    const double hz = mesh.spacing()[2];
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            for (int k = 0; k < nz; ++k) {
                const double w =
                    ((k == 0 || k == nz - 1) ? 0.5 : 1.0) * hz / (2.0 * mesh.eps());
                for (int c = 0; c < 3; ++c)
                    d.mid[3 * midx(i, j) + c] += w * full[3 * mesh.node(i, j, k) + c];
            }

    // midsurface gradient of U3
    auto deriv = [&](int i, int j, int axis) {
        const int n = axis == 0 ? mesh.n1() : mesh.n2();
        const double h = mesh.spacing()[axis];
        auto u3 = [&](int s) {
            return axis == 0 ? d.mid[3 * midx(s, j) + 2] : d.mid[3 * midx(i, s) + 2];
        };
        const int s = axis == 0 ? i : j;
        if (s == 0) return (-3.0 * u3(0) + 4.0 * u3(1) - u3(2)) / (2.0 * h);
        if (s == n) return (3.0 * u3(n) - 4.0 * u3(n - 1) + u3(n - 2)) / (2.0 * h);
        return (u3(s + 1) - u3(s - 1)) / (2.0 * h);
    };

    d.u_kl = Eigen::VectorXd::Zero(3 * mesh.n_nodes());
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double x3 = mesh.node_pos(i, j, k)[2];
                const int n = mesh.node(i, j, k);
                d.u_kl[3 * n + 0] = d.mid[3 * midx(i, j) + 0] - x3 * deriv(i, j, 0);
                d.u_kl[3 * n + 1] = d.mid[3 * midx(i, j) + 1] - x3 * deriv(i, j, 1);
                d.u_kl[3 * n + 2] = d.mid[3 * midx(i, j) + 2];
            }
    d.residual = full - d.u_kl;

    const FieldNorms rn = fine_field_norms(mesh, d.residual);
    d.norm_residual = std::sqrt(rn.u1 * rn.u1 + rn.u2 * rn.u2 + rn.u3 * rn.u3);
    d.norm_grad_residual = rn.gradient;
    d.norm_strain = fine_field_norms(mesh, full).strain;
    return d;
}

// --- two-scale error against the reconstructed limit field -------------------

/// Weak-convergence surrogate: 20 moments of the rescaled unfolded strain
/// against tensor-product test fields (5 strain components x 4 polynomials
/// {1, x1, x2, y3}), plus the strong L2(omega x cell) error (reported, not
/// gated: the convergence is weak).
struct TwoScaleErrorReport {
    double strong_error = 0.0;
    std::array<double, 20> moments_fine{};
    std::array<double, 20> moments_limit{};
    double moment_error_max = 0.0;
};

inline TwoScaleErrorReport two_scale_error(const FineMesh& mesh,
                                           const Eigen::VectorXd& u_full,
                                           const PlateMesh& pmesh,
                                           const Eigen::VectorXd& plate_dofs,
                                           const CorrectorSet& correctors,
                                           const DofMap& cell_dofs) {
    const CellMesh& cell = mesh.cell();
    const auto& m = cell.resolution();
    if (mesh.n1() % m[0] != 0 || mesh.n2() % m[1] != 0 || mesh.n3() != m[2])
        throw GeometryError("two_scale_error: fine and cell grids do not match");
    const int c1 = mesh.n1() / m[0], c2 = mesh.n2() / m[1];
    const double eps = mesh.eps();
    const double jac = (1.0 / m[0]) * (1.0 / m[1]) * (2.0 / m[2]) / 8.0;
    const double w = eps * eps * jac;
    const auto& gauss = detail::hex_gauss_points();

    // component selectors in the symmetric-matrix entry order of SymMat3
    static const std::array<std::pair<int, int>, 5> comps = {
        std::make_pair(0, 0), {1, 1}, {0, 1}, {0, 2}, {2, 2}};

    TwoScaleErrorReport rep;
    double err2 = 0.0;
    for (int b = 0; b < c2; ++b)
        for (int a = 0; a < c1; ++a)
            for (int r = 0; r < m[2]; ++r)
                for (int q = 0; q < m[1]; ++q)
                    for (int p = 0; p < m[0]; ++p) {
                        const int ec = cell.element_index(p, q, r);
                        if (!cell.element_material(ec)) continue;
                        const int ef = mesh.element_index(a * m[0] + p, b * m[1] + q, r);
                        for (size_t g = 0; g < 8; ++g) {
                            // cell coordinates of the Gauss point
                            const double y1 = (p + 0.5 * (1.0 + gauss[g][0])) / m[0];
                            const double y2 = (q + 0.5 * (1.0 + gauss[g][1])) / m[1];
                            const double y3 =
                                -1.0 + (r + 0.5 * (1.0 + gauss[g][2])) * 2.0 / m[2];
                            const double x1 = eps * (a + y1), x2 = eps * (b + y2);

                            const Mat3 fine_e =
                                sym(fine_gradient(mesh, u_full, ef, gauss[g])).to_matrix() /
                                (eps * eps);

                            const PlateStrainPair pair =
                                plate_pair_at(pmesh, plate_dofs, x1, x2);
                            SymMat3 lim = elin_matrix(pair, y3);
                            const Vec6 coef = pair.stacked();
                            for (int f = 0; f < 6; ++f)
                                lim.c += coef[f] * field_strain(cell, cell_dofs,
                                                                correctors.fields
                                                                    [static_cast<size_t>(f)],
                                                                ec, gauss[g])
                                                       .c;
                            const Mat3 lim_e = lim.to_matrix();

                            err2 += w * (fine_e - lim_e).squaredNorm();
                            const double poly[4] = {1.0, x1, x2, y3};
                            for (int c = 0; c < 5; ++c) {
                                const auto [ci, cj] = comps[static_cast<size_t>(c)];
                                for (int t = 0; t < 4; ++t) {
                                    const size_t d = static_cast<size_t>(4 * c + t);
                                    rep.moments_fine[d] += w * fine_e(ci, cj) * poly[t];
                                    rep.moments_limit[d] += w * lim_e(ci, cj) * poly[t];
                                }
                            }
                        }
                    }
    rep.strong_error = std::sqrt(err2);
    for (size_t d = 0; d < 20; ++d)
        rep.moment_error_max = std::max(
            rep.moment_error_max, std::abs(rep.moments_fine[d] - rep.moments_limit[d]));
    return rep;
}

}  // namespace homplate
