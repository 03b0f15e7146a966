#pragma once

// Direct 3D solvers on the physical thin plate Omega_eps = omega x (-eps,eps)
// with oscillating coefficients a(x'/eps, x3/eps): the linear problem giving
// m_eps, St. Venant-Kirchhoff energy evaluation giving J_{eps,h}, the
// linearization study, and the recovery-ansatz upper bound.
//
// The fine mesh resolves every periodicity cell with the same per-cell
// resolution as the cell mesh and samples phases through the cell mesh's own
// element-phase array, so coefficient sampling is bit-identical between the
// two scales.

#include "plate.hpp"

#include <Eigen/IterativeLinearSolvers>

namespace homplate {

/// Physical thin-plate mesh: structured trilinear hexahedra, c1 x c2 cells
/// in-plane (1/eps per unit length), per-cell resolution (m1, m2, m3).
class FineMesh {
  public:
    FineMesh(const CellMesh& cell, double eps, double l1, double l2,
             std::array<bool, 4> clamped)
        : cell_(&cell), eps_(eps), l1_(l1), l2_(l2), clamped_(clamped) {
        if (!(eps > 0.0) || eps > 1.0) throw GeometryError("eps must lie in (0,1]");
        c1_ = static_cast<int>(std::lround(l1 / eps));
        c2_ = static_cast<int>(std::lround(l2 / eps));
        if (std::abs(c1_ * eps - l1) > 1e-12 || std::abs(c2_ * eps - l2) > 1e-12)
            throw GeometryError("omega dimensions must be integer multiples of eps "
                                "(boundary-cut cells are not supported)");
        const auto& m = cell.resolution();
        n1_ = c1_ * m[0];
        n2_ = c2_ * m[1];
        n3_ = m[2];
        h_ = Vec3(eps / m[0], eps / m[1], 2.0 * eps / m[2]);
        mark_active();
    }

    const CellMesh& cell() const { return *cell_; }
    double eps() const { return eps_; }
    double l1() const { return l1_; }
    double l2() const { return l2_; }
    Vec3 spacing() const { return h_; }
    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int n3() const { return n3_; }
    int n_elements() const { return n1_ * n2_ * n3_; }
    int n_nodes() const { return (n1_ + 1) * (n2_ + 1) * (n3_ + 1); }
    double element_volume() const { return h_[0] * h_[1] * h_[2]; }

    int node(int i, int j, int k) const { return i + (n1_ + 1) * (j + (n2_ + 1) * k); }
    int element_index(int i, int j, int k) const { return i + n1_ * (j + n2_ * k); }
    std::array<int, 3> element_ijk(int e) const {
        return {e % n1_, (e / n1_) % n2_, e / (n1_ * n2_)};
    }

    Vec3 node_pos(int i, int j, int k) const {
        return Vec3(i * h_[0], j * h_[1], -eps_ + k * h_[2]);
    }

    /// Phase of a fine element, sampled through the cell mesh's own
    /// element-phase array under x -> ({x'/eps}, x3/eps).
    int element_phase(int e) const {
        const auto [i, j, k] = element_ijk(e);
        const auto& m = cell_->resolution();
        return cell_->element_phase(cell_->element_index(i % m[0], j % m[1], k));
    }
    bool element_material(int e) const {
        const auto [i, j, k] = element_ijk(e);
        const auto& m = cell_->resolution();
        return cell_->element_material(cell_->element_index(i % m[0], j % m[1], k));
    }

    std::array<int, 8> element_nodes(int e) const {
        const auto [i, j, k] = element_ijk(e);
        return {node(i, j, k),         node(i + 1, j, k),     node(i + 1, j + 1, k),
                node(i, j + 1, k),     node(i, j, k + 1),     node(i + 1, j, k + 1),
                node(i + 1, j + 1, k + 1), node(i, j + 1, k + 1)};
    }

    bool node_on_clamped_face(int i, int j, int /*k*/) const {
        return (clamped_[0] && i == 0) || (clamped_[1] && i == n1_) ||
               (clamped_[2] && j == 0) || (clamped_[3] && j == n2_);
    }

    bool node_active(int n) const { return active_[static_cast<size_t>(n)] != 0; }

    /// System DOF of a node component: -1 for inactive or clamped nodes.
    int dof(int n, int c) const {
        const int s = node_sys_[static_cast<size_t>(n)];
        return s < 0 ? -1 : 3 * s + c;
    }
    int n_sys_nodes() const { return n_sys_nodes_; }
    int n_dofs() const { return 3 * n_sys_nodes_; }
    const std::vector<int>& sys_node() const { return sys_node_; }

    /// Expand a system vector to the full nodal layout (clamped/void = 0).
    Eigen::VectorXd expand(const Eigen::VectorXd& sys) const {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(3 * n_nodes());
        for (int s = 0; s < n_sys_nodes_; ++s)
            for (int c = 0; c < 3; ++c)
                full[3 * sys_node_[static_cast<size_t>(s)] + c] = sys[3 * s + c];
        return full;
    }

  private:
    void mark_active() {
        active_.assign(static_cast<size_t>(n_nodes()), 0);
        for (int e = 0; e < n_elements(); ++e) {
            if (!element_material(e)) continue;
            for (int n : element_nodes(e)) active_[static_cast<size_t>(n)] = 1;
        }
        node_sys_.assign(static_cast<size_t>(n_nodes()), -1);
        n_sys_nodes_ = 0;
        for (int k = 0; k <= n3_; ++k)
            for (int j = 0; j <= n2_; ++j)
                for (int i = 0; i <= n1_; ++i) {
                    const int n = node(i, j, k);
                    if (!active_[static_cast<size_t>(n)] || node_on_clamped_face(i, j, k))
                        continue;
                    node_sys_[static_cast<size_t>(n)] = n_sys_nodes_++;
                    sys_node_.push_back(n);
                }
    }

    const CellMesh* cell_;
    double eps_, l1_, l2_;
    std::array<bool, 4> clamped_;
    int c1_ = 0, c2_ = 0, n1_ = 0, n2_ = 0, n3_ = 0;
    Vec3 h_;
    std::vector<uint8_t> active_;
    std::vector<int> node_sys_;
    std::vector<int> sys_node_;
    int n_sys_nodes_ = 0;
};

namespace detail {

// trilinear shapes/gradients on [-1,1]^3, corner order matching CellMesh
inline std::array<double, 8> hex_shape(const Vec3& xi) {
    std::array<double, 8> n{};
    static const int sgn[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (int a = 0; a < 4; ++a) {
        const double w = 0.25 * (1.0 + sgn[a][0] * xi[0]) * (1.0 + sgn[a][1] * xi[1]);
        n[a] = 0.5 * w * (1.0 - xi[2]);
        n[a + 4] = 0.5 * w * (1.0 + xi[2]);
    }
    return n;
}

inline std::array<Vec3, 8> hex_shape_grad(const Vec3& xi) {
    std::array<Vec3, 8> g{};
    static const int sgn[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (int a = 0; a < 4; ++a) {
        const double s1 = sgn[a][0], s2 = sgn[a][1];
        const double w = 0.25 * (1.0 + s1 * xi[0]) * (1.0 + s2 * xi[1]);
        const double dw1 = 0.25 * s1 * (1.0 + s2 * xi[1]);
        const double dw2 = 0.25 * s2 * (1.0 + s1 * xi[0]);
        g[a] = Vec3(dw1 * 0.5 * (1.0 - xi[2]), dw2 * 0.5 * (1.0 - xi[2]), -0.5 * w);
        g[a + 4] = Vec3(dw1 * 0.5 * (1.0 + xi[2]), dw2 * 0.5 * (1.0 + xi[2]), 0.5 * w);
    }
    return g;
}

inline const std::array<Vec3, 8>& hex_gauss_points() {
    static const std::array<Vec3, 8> pts = [] {
        std::array<Vec3, 8> p{};
        const double g = 1.0 / std::sqrt(3.0);
        int idx = 0;
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i)
                    p[static_cast<size_t>(idx++)] =
                        Vec3(i ? g : -g, j ? g : -g, k ? g : -g);
        return p;
    }();
    return pts;
}

inline Eigen::Matrix<double, 6, 24> hex_strain_matrix(const std::array<Vec3, 8>& grad,
                                                      const Vec3& h) {
    Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
    for (int a = 0; a < 8; ++a) {
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

inline SpMat assemble_fine_stiffness(const FineMesh& mesh, const PhaseAssignment& phases) {
    const Vec3 h = mesh.spacing();
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();

    // the 8 reference B-matrices are element-independent on the uniform grid
    std::array<Eigen::Matrix<double, 6, 24>, 8> bq;
    for (size_t q = 0; q < 8; ++q)
        bq[q] = detail::hex_strain_matrix(detail::hex_shape_grad(gauss[q]), h);

    // per-phase element stiffness, reused across all elements of the phase
    std::vector<Eigen::Matrix<double, 24, 24>> ke_phase;
    for (const auto& hk : phases.phases) {
        Eigen::Matrix<double, 24, 24> ke = Eigen::Matrix<double, 24, 24>::Zero();
        const Mat6 ce = hk.elastic_matrix();
        for (size_t q = 0; q < 8; ++q) ke += jac * bq[q].transpose() * ce * bq[q];
        ke_phase.push_back(ke);
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.n_elements()) * 24 * 24);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const auto& ke = ke_phase[static_cast<size_t>(mesh.element_phase(e))];
        const auto nodes = mesh.element_nodes(e);
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b)
                for (int ca = 0; ca < 3; ++ca)
                    for (int cb = 0; cb < 3; ++cb) {
                        const int ra = mesh.dof(nodes[a], ca);
                        const int rb = mesh.dof(nodes[b], cb);
                        if (ra >= 0 && rb >= 0)
                            trips.emplace_back(ra, rb, ke(3 * a + ca, 3 * b + cb));
                    }
    }
    SpMat k(mesh.n_dofs(), mesh.n_dofs());
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
}

/// Scaled body force f_eps = eps^{a+1} f_alpha e_alpha + eps^{a+2} f3 e3 at a
/// physical point (midsurface load functions).
inline Vec3 fine_body_force(const LoadSpec& load, double eps, int a, const Vec3& x) {
    const double sa = std::pow(eps, a + 1);
    return Vec3(sa * load.f[0](x[0], x[1]), sa * load.f[1](x[0], x[1]),
                sa * eps * load.f[2](x[0], x[1]));
}

inline Eigen::VectorXd assemble_fine_load(const FineMesh& mesh, const LoadSpec& load, int a) {
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.n_dofs());
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const auto [i, j, k] = mesh.element_ijk(e);
        const Vec3 origin = mesh.node_pos(i, j, k);
        const auto nodes = mesh.element_nodes(e);
        for (size_t q = 0; q < 8; ++q) {
            const auto shp = detail::hex_shape(gauss[q]);
            const Vec3 x =
                origin + 0.5 * (gauss[q] + Vec3::Ones()).cwiseProduct(mesh.spacing());
            const Vec3 fv = fine_body_force(load, mesh.eps(), a, x);
            for (int n = 0; n < 8; ++n)
                for (int c = 0; c < 3; ++c) {
                    const int d = mesh.dof(nodes[n], c);
                    if (d >= 0) f[d] += jac * shp[static_cast<size_t>(n)] * fv[c];
                }
        }
    }
    return f;
}

struct FineSolution {
    Eigen::VectorXd u;      // system layout
    double m_eps = 0.0;     // J^Lin at the minimizer
    double load_term = 0.0; // int f_eps . u
    double residual = 0.0;
    int n_dofs = 0;
    int iterations = 0;     // 0 when solved directly
};

/// Solve the linear fine problem: direct LDLT below a DOF threshold, Jacobi
/// CG above it (thin plates are ill-conditioned; the threshold is generous).
inline FineSolution solve_linear_fine(const FineMesh& mesh, const SpMat& k,
                                      const Eigen::VectorXd& f, double tol = 1e-12,
                                      int direct_threshold = 200000) {
    FineSolution sol;
    sol.n_dofs = static_cast<int>(k.rows());
    if (k.rows() <= direct_threshold) {
        Eigen::SimplicialLDLT<SpMat> solver(k);
        if (solver.info() != Eigen::Success)
            throw SolverError("fine stiffness factorization failed");
        sol.u = solver.solve(f);
    } else {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(k);
        cg.setTolerance(tol);
        cg.setMaxIterations(200000);
        sol.u = cg.solve(f);
        sol.iterations = static_cast<int>(cg.iterations());
        if (cg.info() != Eigen::Success)
            throw SolverError("fine CG did not converge: error " + std::to_string(cg.error()));
    }
    sol.load_term = f.dot(sol.u);
    sol.m_eps = 0.5 * sol.u.dot(k * sol.u) - sol.load_term;
    const double fn = f.norm();
    sol.residual = fn > 0.0 ? (k * sol.u - f).norm() / fn : 0.0;
    return sol;
}

// --- energy evaluation along deformations id + h u ------------------------

/// Exact polynomial-in-h split of the St. Venant-Kirchhoff energy along
/// id + h u: J(h) = h^2 quadratic + h^3 cubic + h^4 quartic - h^2 load
/// (valid whenever every Gauss point has det(I + h grad u) > 0).
struct EnergyTerms {
    double quadratic = 0.0;  // int Q(e(u))
    double cubic = 0.0;      // int a(e(u), u^T u gradient correction)
    double quartic = 0.0;    // int Q(grad u^T grad u)/4
    double load = 0.0;       // int f_eps . u

    double linear_energy() const { return quadratic - load; }
    double total(double h) const {
        return h * h * quadratic + h * h * h * cubic + h * h * h * h * quartic -
               h * h * load;
    }
};

inline Mat3 fine_gradient(const FineMesh& mesh, const Eigen::VectorXd& full, int e,
                          const Vec3& xi) {
    const auto grad = detail::hex_shape_grad(xi);
    const Vec3 h = mesh.spacing();
    const auto nodes = mesh.element_nodes(e);
    Mat3 g = Mat3::Zero();
    for (int a = 0; a < 8; ++a) {
        const Vec3 gp(grad[a][0] * 2.0 / h[0], grad[a][1] * 2.0 / h[1],
                      grad[a][2] * 2.0 / h[2]);
        for (int c = 0; c < 3; ++c) g.row(c) += full[3 * nodes[a] + c] * gp.transpose();
    }
    return g;
}

inline EnergyTerms fine_energy_terms(const FineMesh& mesh, const PhaseAssignment& phases,
                                     const Eigen::VectorXd& full, const LoadSpec& load,
                                     int a_exp) {
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();
    EnergyTerms t;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const HookeTensor& hk = phases.hooke(mesh.element_phase(e));
        const auto [i, j, k] = mesh.element_ijk(e);
        const Vec3 origin = mesh.node_pos(i, j, k);
        const auto nodes = mesh.element_nodes(e);
        for (size_t q = 0; q < 8; ++q) {
            const Mat3 g = fine_gradient(mesh, full, e, gauss[q]);
            const SymMat3 eu = sym(g);
            const SymMat3 gtg = SymMat3::from_matrix(g.transpose() * g);
            t.quadratic += jac * hk.quadratic(eu);
            t.cubic += jac * hk.bilinear(eu, gtg);
            t.quartic += jac * 0.25 * hk.quadratic(gtg);
            const auto shp = detail::hex_shape(gauss[q]);
            const Vec3 x =
                origin + 0.5 * (gauss[q] + Vec3::Ones()).cwiseProduct(mesh.spacing());
            const Vec3 fv = fine_body_force(load, mesh.eps(), a_exp, x);
            Vec3 uv = Vec3::Zero();
            for (int n = 0; n < 8; ++n)
                for (int c = 0; c < 3; ++c)
                    uv[c] += shp[static_cast<size_t>(n)] * full[3 * nodes[n] + c];
            t.load += jac * fv.dot(uv);
        }
    }
    return t;
}

/// J_{eps,h}(id + h u) by direct Gauss-point evaluation of the nonlinear
/// density, with the determinant guard; +infinity is a flagged value.
inline ExtReal fine_nonlinear_energy(const FineMesh& mesh, const PhaseAssignment& phases,
                                     const Eigen::VectorXd& full, const LoadSpec& load,
                                     double h, int a_exp) {
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();
    ExtReal total;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const HookeTensor& hk = phases.hooke(mesh.element_phase(e));
        const auto [i, j, k] = mesh.element_ijk(e);
        const Vec3 origin = mesh.node_pos(i, j, k);
        const auto nodes = mesh.element_nodes(e);
        for (size_t q = 0; q < 8; ++q) {
            const Mat3 f = Mat3::Identity() + h * fine_gradient(mesh, full, e, gauss[q]);
            const ExtReal w = nonlinear_density(hk, f);
            if (!w.finite) return ExtReal::infinite();
            total.value += jac * w.value;
            // load term: f_{h,eps} . (v - id) = h^2 f_eps . u
            const auto shp = detail::hex_shape(gauss[q]);
            const Vec3 x =
                origin + 0.5 * (gauss[q] + Vec3::Ones()).cwiseProduct(mesh.spacing());
            const Vec3 fv = fine_body_force(load, mesh.eps(), a_exp, x);
            Vec3 uv = Vec3::Zero();
            for (int n = 0; n < 8; ++n)
                for (int c = 0; c < 3; ++c)
                    uv[c] += shp[static_cast<size_t>(n)] * full[3 * nodes[n] + c];
            total.value -= jac * h * h * fv.dot(uv);
        }
    }
    return total;
}

// --- diagnostics over the displacement field -------------------------------

/// L2 norms over Omega_eps: (|u1|, |u2|, |u3|, |e(u)|, |grad u|).
struct FieldNorms {
    double u1 = 0.0, u2 = 0.0, u3 = 0.0, strain = 0.0, gradient = 0.0;
};

inline FieldNorms fine_field_norms(const FineMesh& mesh, const Eigen::VectorXd& full) {
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();
    FieldNorms n;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        const auto nodes = mesh.element_nodes(e);
        for (size_t q = 0; q < 8; ++q) {
            const auto shp = detail::hex_shape(gauss[q]);
            Vec3 uv = Vec3::Zero();
            for (int a = 0; a < 8; ++a)
                for (int c = 0; c < 3; ++c)
                    uv[c] += shp[static_cast<size_t>(a)] * full[3 * nodes[a] + c];
            const Mat3 g = fine_gradient(mesh, full, e, gauss[q]);
            const double en = sym(g).frobenius_norm();
            n.u1 += jac * uv[0] * uv[0];
            n.u2 += jac * uv[1] * uv[1];
            n.u3 += jac * uv[2] * uv[2];
            n.strain += jac * en * en;
            n.gradient += jac * g.squaredNorm();
        }
    }
    n.u1 = std::sqrt(n.u1);
    n.u2 = std::sqrt(n.u2);
    n.u3 = std::sqrt(n.u3);
    n.strain = std::sqrt(n.strain);
    n.gradient = std::sqrt(n.gradient);
    return n;
}

/// Rigidity diagnostic D(v) for v = id + h u: L2 norm of dist(grad v, SO(3)).
inline double fine_rigidity_norm(const FineMesh& mesh, const Eigen::VectorXd& full, double h) {
    const double jac = mesh.element_volume() / 8.0;
    const auto& gauss = detail::hex_gauss_points();
    double acc = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        if (!mesh.element_material(e)) continue;
        for (size_t q = 0; q < 8; ++q) {
            const Mat3 f = Mat3::Identity() + h * fine_gradient(mesh, full, e, gauss[q]);
            const double d = rigidity_distance(f);
            acc += jac * d * d;
        }
    }
    return std::sqrt(acc);
}

// --- linearization study ----------------------------------------------------

struct LinearizationRow {
    double h = 0.0;
    double r = 0.0;        // J_{eps,h}(id + h u)/h^2 - J^Lin(u)
    bool admissible = true;
};

struct LinearizationReport {
    std::vector<LinearizationRow> rows;
    double slope = 0.0;   // log-log slope of |r| vs h over admissible rows
    double j_lin = 0.0;
};

inline LinearizationReport linearization_study(const FineMesh& mesh,
                                               const PhaseAssignment& phases,
                                               const Eigen::VectorXd& full,
                                               const LoadSpec& load, int a_exp,
                                               const std::vector<double>& h_ladder) {
    LinearizationReport rep;
    const EnergyTerms terms = fine_energy_terms(mesh, phases, full, load, a_exp);
    rep.j_lin = terms.linear_energy();
    std::vector<double> lh, lr;
    for (double h : h_ladder) {
        LinearizationRow row;
        row.h = h;
        const ExtReal j = fine_nonlinear_energy(mesh, phases, full, load, h, a_exp);
        row.admissible = j.finite;
        if (j.finite) {
            row.r = j.value / (h * h) - rep.j_lin;
            if (std::abs(row.r) > 0.0) {
                lh.push_back(std::log(h));
                lr.push_back(std::log(std::abs(row.r)));
            }
        }
        rep.rows.push_back(row);
    }
    if (lh.size() >= 2) {
        // least-squares slope
        double mh = 0.0, mr = 0.0;
        for (size_t i = 0; i < lh.size(); ++i) {
            mh += lh[i];
            mr += lr[i];
        }
        mh /= static_cast<double>(lh.size());
        mr /= static_cast<double>(lh.size());
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < lh.size(); ++i) {
            num += (lh[i] - mh) * (lr[i] - mr);
            den += (lh[i] - mh) * (lh[i] - mh);
        }
        rep.slope = num / den;
    }
    return rep;
}

// --- recovery ansatz --------------------------------------------------------

/// Nodal displacement field of the recovery sequence built from a plate
/// solution and the cell correctors:
///   U_alpha = eps^2 (U_alpha - (x3/eps) d_alpha U3 + eps rho u-hat_alpha)
///   U_3     = eps   (U3 + eps^2 rho u-hat_3)
/// with u-hat(x', y) = sum_k v_k(x') chi_k(y) for the generalized strain
/// vector v = (e11, e22, e12, D11, D22, D12), the cutoff rho vanishing on the
/// clamped boundary over a band of width cutoff_cells * eps, and optional
/// in-plane box smoothing of the u-hat nodal field.
inline Eigen::VectorXd recovery_displacement(const FineMesh& mesh, const PlateMesh& pmesh,
                                             const Eigen::VectorXd& plate_dofs,
                                             const CorrectorSet& correctors,
                                             const DofMap& cell_dofs, double cutoff_cells = 2.0,
                                             int n_smoothing = 1) {
    const CellMesh& cell = mesh.cell();
    const auto& m = cell.resolution();
    const double eps = mesh.eps();

    // corrector values at cell corner nodes (bubbles vanish there)
    std::array<std::vector<Vec3>, 6> chi;
    for (int f = 0; f < 6; ++f) {
        chi[static_cast<size_t>(f)].assign(static_cast<size_t>(cell.n_corner_nodes()),
                                           Vec3::Zero());
        for (int n = 0; n < cell.n_corner_nodes(); ++n) {
            const int s = cell_dofs.node_sys[static_cast<size_t>(n)];
            if (s < 0) continue;
            for (int c = 0; c < 3; ++c)
                chi[static_cast<size_t>(f)][static_cast<size_t>(n)][c] =
                    correctors.fields[static_cast<size_t>(f)][3 * s + c];
        }
    }

    auto clamped_dist = [&](double x1, double x2) {
        double d = std::numeric_limits<double>::max();
        const auto& cl = pmesh.clamped;
        if (cl[0]) d = std::min(d, x1);
        if (cl[1]) d = std::min(d, pmesh.L1 - x1);
        if (cl[2]) d = std::min(d, x2);
        if (cl[3]) d = std::min(d, pmesh.L2 - x2);
        return d;
    };

    // u-hat on the fine node grid (per z-level), then smoothed in-plane
    const int nx = mesh.n1() + 1, ny = mesh.n2() + 1, nz = mesh.n3() + 1;
    std::vector<Vec3> uhat(static_cast<size_t>(nx * ny * nz), Vec3::Zero());
    auto uidx = [&](int i, int j, int k) { return i + nx * (j + ny * k); };
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const Vec3 x = mesh.node_pos(i, j, k);
                const PlateStrainPair pair = plate_pair_at(pmesh, plate_dofs, x[0], x[1]);
                const int cellnode = cell.corner_node(i % m[0], j % m[1], k);
                Vec3 v = Vec3::Zero();
                Eigen::Matrix<double, 6, 1> coef;
                coef << pair.membrane, pair.curvature;
                for (int f = 0; f < 6; ++f)
                    v += coef[f] * chi[static_cast<size_t>(f)][static_cast<size_t>(cellnode)];
                const double rho =
                    std::clamp(clamped_dist(x[0], x[1]) / (cutoff_cells * eps), 0.0, 1.0);
                uhat[static_cast<size_t>(uidx(i, j, k))] = rho * v;
            }
    for (int pass = 0; pass < n_smoothing; ++pass) {
        std::vector<Vec3> sm = uhat;
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    Vec3 acc = Vec3::Zero();
                    int cnt = 0;
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int di = -1; di <= 1; ++di) {
                            const int ii = i + di, jj = j + dj;
                            if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
                            acc += uhat[static_cast<size_t>(uidx(ii, jj, k))];
                            ++cnt;
                        }
                    sm[static_cast<size_t>(uidx(i, j, k))] = acc / cnt;
                }
        uhat = std::move(sm);
    }

    Eigen::VectorXd full = Eigen::VectorXd::Zero(3 * mesh.n_nodes());
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const Vec3 x = mesh.node_pos(i, j, k);
                const Vec3 u3kl = plate_displacement_at(pmesh, plate_dofs, x[0], x[1]);
                const Eigen::Vector2d gw =
                    plate_deflection_gradient_at(pmesh, plate_dofs, x[0], x[1]);
                const Vec3& uh = uhat[static_cast<size_t>(uidx(i, j, k))];
                const int n = mesh.node(i, j, k);
                full[3 * n + 0] = eps * eps * (u3kl[0] - (x[2] / eps) * gw[0] + eps * uh[0]);
                full[3 * n + 1] = eps * eps * (u3kl[1] - (x[2] / eps) * gw[1] + eps * uh[1]);
                full[3 * n + 2] = eps * (u3kl[2] + eps * eps * uh[2]);
            }
    // exact zero on the clamped faces
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                if (mesh.node_on_clamped_face(i, j, k))
                    for (int c = 0; c < 3; ++c) full[3 * mesh.node(i, j, k) + c] = 0.0;
    return full;
}

}  // namespace homplate
