#pragma once

// Homogenized Kirchhoff-Love plate solver on a rectangle midsurface.
//
// Bending uses Bogner-Fox-Schmit C^1 rectangles (4 DOFs per corner node:
// w, w_x, w_y, w_xy), membrane uses biquadratic (Q2) nodal elements on the
// same grid. The discrete functional is
//   J(U) = int_omega (v^T G v) dx' - int_omega F . U dx',
// with v = (e11, e22, e12, d11 w, d22 w, d12 w), G = [[A,B],[B^T,C]] and
// F = |Y| f; W is the full density (no 1/2), so the Euler-Lagrange system
// carries the factor 2. At the minimizer m_L = -1/2 int F . U.

#include "homogenize.hpp"

#include <Eigen/SparseCholesky>

namespace homplate {

/// Structured quad grid on omega = (0,L1) x (0,L2); clamped edge subset.
struct PlateMesh {
    double L1 = 1.0, L2 = 1.0;
    int nx = 8, ny = 8;
    // clamped sides: {x=0, x=L1, y=0, y=L2}
    std::array<bool, 4> clamped = {true, true, true, true};

    double hx() const { return L1 / nx; }
    double hy() const { return L2 / ny; }

    // Q2 membrane grid (2nx+1) x (2ny+1), two components per node
    int m_grid_x() const { return 2 * nx + 1; }
    int m_grid_y() const { return 2 * ny + 1; }
    int m_node(int gi, int gj) const { return gi + m_grid_x() * gj; }
    int n_membrane_dofs() const { return 2 * m_grid_x() * m_grid_y(); }

    // BFS bending grid (nx+1) x (ny+1), four DOFs per node
    int b_node(int i, int j) const { return i + (nx + 1) * j; }
    int n_bending_dofs() const { return 4 * (nx + 1) * (ny + 1); }

    int n_dofs() const { return n_membrane_dofs() + n_bending_dofs(); }
    int membrane_dof(int gi, int gj, int c) const { return 2 * m_node(gi, gj) + c; }
    int bending_dof(int i, int j, int t) const {
        return n_membrane_dofs() + 4 * b_node(i, j) + t;
    }

    bool any_clamped() const { return clamped[0] || clamped[1] || clamped[2] || clamped[3]; }
};

/// Midsurface load f = (f1, f2, f3); the limit functional sees F = |Y| f.
struct LoadSpec {
    std::function<double(double, double)> f[3];

    static LoadSpec constant(const Vec3& v) {
        LoadSpec l;
        for (int c = 0; c < 3; ++c) l.f[c] = [v, c](double, double) { return v[c]; };
        return l;
    }
    static LoadSpec zero() { return constant(Vec3::Zero()); }
};

namespace detail {

// 1D quadratic shapes on [-1,1] at nodes {-1, 0, +1}.
inline void quad1d(double xi, double n[3], double d[3]) {
    n[0] = 0.5 * xi * (xi - 1.0);
    n[1] = 1.0 - xi * xi;
    n[2] = 0.5 * xi * (xi + 1.0);
    d[0] = xi - 0.5;
    d[1] = -2.0 * xi;
    d[2] = xi + 0.5;
}

// 1D cubic Hermite shapes on [-1,1]; order (value@-1, slope@-1, value@+1,
// slope@+1), slopes w.r.t. xi.
inline void hermite1d(double xi, double n[4], double d[4], double dd[4]) {
    const double um = 1.0 - xi, up = 1.0 + xi;
    n[0] = 0.25 * um * um * (2.0 + xi);
    n[1] = 0.25 * um * um * up;
    n[2] = 0.25 * up * up * (2.0 - xi);
    n[3] = -0.25 * up * up * um;
    d[0] = -0.75 * (1.0 - xi * xi);
    d[1] = 0.25 * um * (-1.0 - 3.0 * xi);
    d[2] = 0.75 * (1.0 - xi * xi);
    d[3] = -0.25 * up * (1.0 - 3.0 * xi);
    dd[0] = 1.5 * xi;
    dd[1] = 1.5 * xi - 0.5;
    dd[2] = -1.5 * xi;
    dd[3] = 0.5 + 1.5 * xi;
}

struct Gauss1d {
    std::vector<double> p, w;
};

inline const Gauss1d& gauss3() {
    static const Gauss1d g = [] {
        Gauss1d r;
        const double s = std::sqrt(3.0 / 5.0);
        r.p = {-s, 0.0, s};
        r.w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        return r;
    }();
    return g;
}

inline const Gauss1d& gauss4() {
    static const Gauss1d g = [] {
        Gauss1d r;
        r.p = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
               0.8611363115940526};
        r.w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
               0.3478548451374538};
        return r;
    }();
    return g;
}

// Local DOF table of one plate element: 18 membrane + 16 bending entries.
inline std::array<int, 34> plate_element_dofs(const PlateMesh& mesh, int ex, int ey) {
    std::array<int, 34> out{};
    int idx = 0;
    for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 2; ++c)
                out[static_cast<size_t>(idx++)] =
                    mesh.membrane_dof(2 * ex + a, 2 * ey + b, c);
    for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a)
            for (int t = 0; t < 4; ++t)
                out[static_cast<size_t>(idx++)] = mesh.bending_dof(ex + a, ey + b, t);
    return out;
}

// 6x34 generalized-strain matrix at a local point: rows
// (e11, e22, e12, d11 w, d22 w, d12 w).
inline Eigen::Matrix<double, 6, 34> plate_strain_matrix(const PlateMesh& mesh, double xi,
                                                        double eta) {
    const double sx = 2.0 / mesh.hx(), sy = 2.0 / mesh.hy();
    Eigen::Matrix<double, 6, 34> bm = Eigen::Matrix<double, 6, 34>::Zero();

    double nq[3], dq[3], nr[3], dr[3];
    quad1d(xi, nq, dq);
    quad1d(eta, nr, dr);
    int idx = 0;
    for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a) {
            const double dx = dq[a] * nr[b] * sx;
            const double dy = nq[a] * dr[b] * sy;
            bm(0, idx) = dx;          // e11 from u1
            bm(2, idx) = 0.5 * dy;    // e12 from u1
            bm(1, idx + 1) = dy;      // e22 from u2
            bm(2, idx + 1) = 0.5 * dx;
            idx += 2;
        }

    double hxn[4], hxd[4], hxdd[4], hyn[4], hyd[4], hydd[4];
    hermite1d(xi, hxn, hxd, hxdd);
    hermite1d(eta, hyn, hyd, hydd);
    // per corner, xi-direction Hermite pair (value, slope) and same in eta;
    // slope DOFs carry physical derivatives, hence the h/2 scalings
    for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a)
            for (int t = 0; t < 4; ++t) {
                const int ix = 2 * a + (t == 1 || t == 3 ? 1 : 0);
                const int iy = 2 * b + (t == 2 || t == 3 ? 1 : 0);
                double scale = 1.0;
                if (t == 1 || t == 3) scale *= mesh.hx() / 2.0;
                if (t == 2 || t == 3) scale *= mesh.hy() / 2.0;
                bm(3, idx) = scale * hxdd[ix] * hyn[iy] * sx * sx;
                bm(4, idx) = scale * hxn[ix] * hydd[iy] * sy * sy;
                bm(5, idx) = scale * hxd[ix] * hyd[iy] * sx * sy;
                ++idx;
            }
    return bm;
}

// 3x34 displacement matrix (U1, U2, U3) at a local point.
inline Eigen::Matrix<double, 3, 34> plate_value_matrix(const PlateMesh& mesh, double xi,
                                                       double eta) {
    Eigen::Matrix<double, 3, 34> vm = Eigen::Matrix<double, 3, 34>::Zero();
    double nq[3], dq[3], nr[3], dr[3];
    quad1d(xi, nq, dq);
    quad1d(eta, nr, dr);
    int idx = 0;
    for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a) {
            vm(0, idx) = nq[a] * nr[b];
            vm(1, idx + 1) = nq[a] * nr[b];
            idx += 2;
        }
    double hxn[4], hxd[4], hxdd[4], hyn[4], hyd[4], hydd[4];
    hermite1d(xi, hxn, hxd, hxdd);
    hermite1d(eta, hyn, hyd, hydd);
    for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a)
            for (int t = 0; t < 4; ++t) {
                const int ix = 2 * a + (t == 1 || t == 3 ? 1 : 0);
                const int iy = 2 * b + (t == 2 || t == 3 ? 1 : 0);
                double scale = 1.0;
                if (t == 1 || t == 3) scale *= mesh.hx() / 2.0;
                if (t == 2 || t == 3) scale *= mesh.hy() / 2.0;
                vm(2, idx) = scale * hxn[ix] * hyn[iy];
                ++idx;
            }
    return vm;
}

}  // namespace detail

/// Mask of DOFs fixed to zero by the clamped edges (membrane components and
/// all four BFS DOFs of edge nodes).
inline std::vector<uint8_t> clamped_dof_mask(const PlateMesh& mesh) {
    if (!mesh.any_clamped())
        throw std::invalid_argument("clamped edge set gamma must have nonzero length");
    std::vector<uint8_t> fixed(static_cast<size_t>(mesh.n_dofs()), 0);
    auto on_edge_m = [&](int gi, int gj) {
        return (mesh.clamped[0] && gi == 0) || (mesh.clamped[1] && gi == mesh.m_grid_x() - 1) ||
               (mesh.clamped[2] && gj == 0) || (mesh.clamped[3] && gj == mesh.m_grid_y() - 1);
    };
    for (int gj = 0; gj < mesh.m_grid_y(); ++gj)
        for (int gi = 0; gi < mesh.m_grid_x(); ++gi)
            if (on_edge_m(gi, gj))
                for (int c = 0; c < 2; ++c)
                    fixed[static_cast<size_t>(mesh.membrane_dof(gi, gj, c))] = 1;
    auto on_edge_b = [&](int i, int j) {
        return (mesh.clamped[0] && i == 0) || (mesh.clamped[1] && i == mesh.nx) ||
               (mesh.clamped[2] && j == 0) || (mesh.clamped[3] && j == mesh.ny);
    };
    for (int j = 0; j <= mesh.ny; ++j)
        for (int i = 0; i <= mesh.nx; ++i)
            if (on_edge_b(i, j))
                for (int t = 0; t < 4; ++t)
                    fixed[static_cast<size_t>(mesh.bending_dof(i, j, t))] = 1;
    return fixed;
}

/// Assembled plate problem over the free DOFs. K is the Euler-Lagrange
/// operator (factor 2 included): K u = F at the minimizer.
struct PlateSystem {
    PlateMesh mesh;
    SpMat k;               // free x free
    Eigen::VectorXd f;     // free
    std::vector<int> free_of_full;  // -1 for clamped DOFs
    std::vector<int> full_of_free;
    int n_free = 0;
};

inline PlateSystem assemble_plate_system(const PlateMesh& mesh, const PlateTensor& tensor,
                                         const LoadSpec& load) {
    PlateSystem sys;
    sys.mesh = mesh;
    const auto fixed = clamped_dof_mask(mesh);
    sys.free_of_full.assign(static_cast<size_t>(mesh.n_dofs()), -1);
    for (int d = 0; d < mesh.n_dofs(); ++d)
        if (!fixed[static_cast<size_t>(d)]) {
            sys.free_of_full[static_cast<size_t>(d)] = sys.n_free++;
            sys.full_of_free.push_back(d);
        }

    // the elastic term of the limit functional carries the cell volume
    // |Y| = 2 just like the load; the additional factor 2 turns the full
    // quadratic form v^T G v into its Euler-Lagrange matrix
    const Mat6 g2 = 4.0 * tensor.block();
    const double jac = mesh.hx() * mesh.hy() / 4.0;
    const auto& gs = detail::gauss4();
    const auto& gl = detail::gauss3();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.nx) * mesh.ny * 34 * 34);
    sys.f = Eigen::VectorXd::Zero(sys.n_free);

    for (int ey = 0; ey < mesh.ny; ++ey)
        for (int ex = 0; ex < mesh.nx; ++ex) {
            const auto dofs = detail::plate_element_dofs(mesh, ex, ey);
            Eigen::Matrix<double, 34, 34> ke = Eigen::Matrix<double, 34, 34>::Zero();
            for (size_t qa = 0; qa < gs.p.size(); ++qa)
                for (size_t qb = 0; qb < gs.p.size(); ++qb) {
                    const auto bm = detail::plate_strain_matrix(mesh, gs.p[qa], gs.p[qb]);
                    ke += (gs.w[qa] * gs.w[qb] * jac) * bm.transpose() * g2 * bm;
                }
            Eigen::Matrix<double, 34, 1> fe = Eigen::Matrix<double, 34, 1>::Zero();
            for (size_t qa = 0; qa < gl.p.size(); ++qa)
                for (size_t qb = 0; qb < gl.p.size(); ++qb) {
                    const double x1 = (ex + 0.5 * (1.0 + gl.p[qa])) * mesh.hx();
                    const double x2 = (ey + 0.5 * (1.0 + gl.p[qb])) * mesh.hy();
                    // F = |Y| f with |Y| = 2
                    const Vec3 fv(2.0 * load.f[0](x1, x2), 2.0 * load.f[1](x1, x2),
                                  2.0 * load.f[2](x1, x2));
                    const auto vm = detail::plate_value_matrix(mesh, gl.p[qa], gl.p[qb]);
                    fe += (gl.w[qa] * gl.w[qb] * jac) * vm.transpose() * fv;
                }
            for (int a = 0; a < 34; ++a) {
                const int fa = sys.free_of_full[static_cast<size_t>(dofs[a])];
                if (fa < 0) continue;
                sys.f[fa] += fe[a];
                for (int b = 0; b < 34; ++b) {
                    const int fb = sys.free_of_full[static_cast<size_t>(dofs[b])];
                    if (fb >= 0) trips.emplace_back(fa, fb, ke(a, b));
                }
            }
        }
    sys.k.resize(sys.n_free, sys.n_free);
    sys.k.setFromTriplets(trips.begin(), trips.end());
    return sys;
}

/// Plate minimizer: full DOF vector (clamped entries exactly zero), the
/// limit energy m_L = J(U) and the load term at the solution.
struct PlateSolution {
    Eigen::VectorXd dofs;  // full layout
    double m_L = 0.0;
    double load_term = 0.0;  // |Y| int f . U at the minimizer
    double residual = 0.0;   // relative Euler-Lagrange residual
};

inline PlateSolution solve_plate(const PlateSystem& sys) {
    Eigen::SimplicialLDLT<SpMat> solver(sys.k);
    if (solver.info() != Eigen::Success)
        throw SolverError("plate system factorization failed (clamped set too small or "
                          "tensor not positive definite)");
    const Eigen::VectorXd u = solver.solve(sys.f);
    PlateSolution sol;
    sol.dofs = Eigen::VectorXd::Zero(sys.mesh.n_dofs());
    for (int i = 0; i < sys.n_free; ++i)
        sol.dofs[sys.full_of_free[static_cast<size_t>(i)]] = u[i];
    sol.load_term = sys.f.dot(u);
    sol.m_L = 0.5 * u.dot(sys.k * u) - sol.load_term;  // = -load_term/2
    const double fn = sys.f.norm();
    sol.residual = fn > 0.0 ? (sys.k * u - sys.f).norm() / fn : 0.0;
    return sol;
}

// --- pointwise evaluation ------------------------------------------------

/// Generalized strain pair (membrane strain, curvature of U3) at a point.
inline PlateStrainPair plate_pair_at(const PlateMesh& mesh, const Eigen::VectorXd& dofs,
                                     double x1, double x2) {
    const int ex = std::min(std::max(static_cast<int>(x1 / mesh.hx()), 0), mesh.nx - 1);
    const int ey = std::min(std::max(static_cast<int>(x2 / mesh.hy()), 0), mesh.ny - 1);
    const double xi = 2.0 * (x1 / mesh.hx() - ex) - 1.0;
    const double eta = 2.0 * (x2 / mesh.hy() - ey) - 1.0;
    const auto bm = detail::plate_strain_matrix(mesh, xi, eta);
    const auto ed = detail::plate_element_dofs(mesh, ex, ey);
    Eigen::Matrix<double, 34, 1> ue;
    for (int a = 0; a < 34; ++a) ue[a] = dofs[ed[static_cast<size_t>(a)]];
    const Vec6 v = bm * ue;
    PlateStrainPair pair;
    pair.membrane = v.head<3>();
    pair.curvature = v.tail<3>();
    return pair;
}

/// (U1, U2, U3) at a point.
inline Vec3 plate_displacement_at(const PlateMesh& mesh, const Eigen::VectorXd& dofs,
                                  double x1, double x2) {
    const int ex = std::min(std::max(static_cast<int>(x1 / mesh.hx()), 0), mesh.nx - 1);
    const int ey = std::min(std::max(static_cast<int>(x2 / mesh.hy()), 0), mesh.ny - 1);
    const double xi = 2.0 * (x1 / mesh.hx() - ex) - 1.0;
    const double eta = 2.0 * (x2 / mesh.hy() - ey) - 1.0;
    const auto vm = detail::plate_value_matrix(mesh, xi, eta);
    const auto ed = detail::plate_element_dofs(mesh, ex, ey);
    Eigen::Matrix<double, 34, 1> ue;
    for (int a = 0; a < 34; ++a) ue[a] = dofs[ed[static_cast<size_t>(a)]];
    return vm * ue;
}

/// Gradient of the deflection (d1 U3, d2 U3) at a point.
inline Eigen::Vector2d plate_deflection_gradient_at(const PlateMesh& mesh,
                                                    const Eigen::VectorXd& dofs, double x1,
                                                    double x2) {
    const int ex = std::min(std::max(static_cast<int>(x1 / mesh.hx()), 0), mesh.nx - 1);
    const int ey = std::min(std::max(static_cast<int>(x2 / mesh.hy()), 0), mesh.ny - 1);
    const double xi = 2.0 * (x1 / mesh.hx() - ex) - 1.0;
    const double eta = 2.0 * (x2 / mesh.hy() - ey) - 1.0;
    double hxn[4], hxd[4], hxdd[4], hyn[4], hyd[4], hydd[4];
    detail::hermite1d(xi, hxn, hxd, hxdd);
    detail::hermite1d(eta, hyn, hyd, hydd);
    const double sx = 2.0 / mesh.hx(), sy = 2.0 / mesh.hy();
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a)
            for (int t = 0; t < 4; ++t) {
                const int ix = 2 * a + (t == 1 || t == 3 ? 1 : 0);
                const int iy = 2 * b + (t == 2 || t == 3 ? 1 : 0);
                double scale = 1.0;
                if (t == 1 || t == 3) scale *= mesh.hx() / 2.0;
                if (t == 2 || t == 3) scale *= mesh.hy() / 2.0;
                const double c = dofs[mesh.bending_dof(ex + a, ey + b, t)] * scale;
                g[0] += c * hxd[ix] * hyn[iy] * sx;
                g[1] += c * hxn[ix] * hyd[iy] * sy;
            }
    return g;
}

/// Nodal interpolation of analytic plate fields into the DOF layout.
/// membrane(x1,x2) -> (U1,U2); bending(x1,x2) -> (w, w_x, w_y, w_xy).
inline Eigen::VectorXd interpolate_plate_field(
    const PlateMesh& mesh,
    const std::function<Eigen::Vector2d(double, double)>& membrane,
    const std::function<Eigen::Matrix<double, 4, 1>(double, double)>& bending) {
    Eigen::VectorXd dofs = Eigen::VectorXd::Zero(mesh.n_dofs());
    for (int gj = 0; gj < mesh.m_grid_y(); ++gj)
        for (int gi = 0; gi < mesh.m_grid_x(); ++gi) {
            const Eigen::Vector2d um =
                membrane(gi * 0.5 * mesh.hx(), gj * 0.5 * mesh.hy());
            dofs[mesh.membrane_dof(gi, gj, 0)] = um[0];
            dofs[mesh.membrane_dof(gi, gj, 1)] = um[1];
        }
    for (int j = 0; j <= mesh.ny; ++j)
        for (int i = 0; i <= mesh.nx; ++i) {
            const auto wb = bending(i * mesh.hx(), j * mesh.hy());
            for (int t = 0; t < 4; ++t) dofs[mesh.bending_dof(i, j, t)] = wb[t];
        }
    return dofs;
}

/// Elastic part of the limit functional (no load): |Y| int v^T G v.
inline double plate_energy(const PlateMesh& mesh, const PlateTensor& tensor,
                           const Eigen::VectorXd& dofs) {
    const Mat6 g = 2.0 * tensor.block();
    const double jac = mesh.hx() * mesh.hy() / 4.0;
    const auto& gs = detail::gauss4();
    double acc = 0.0;
    for (int ey = 0; ey < mesh.ny; ++ey)
        for (int ex = 0; ex < mesh.nx; ++ex) {
            const auto ed = detail::plate_element_dofs(mesh, ex, ey);
            Eigen::Matrix<double, 34, 1> ue;
            for (int a = 0; a < 34; ++a) ue[a] = dofs[ed[static_cast<size_t>(a)]];
            for (size_t qa = 0; qa < gs.p.size(); ++qa)
                for (size_t qb = 0; qb < gs.p.size(); ++qb) {
                    const Vec6 v = detail::plate_strain_matrix(mesh, gs.p[qa], gs.p[qb]) * ue;
                    acc += gs.w[qa] * gs.w[qb] * jac * v.dot(g * v);
                }
        }
    return acc;
}

}  // namespace homplate
