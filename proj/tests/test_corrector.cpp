#include <catch2/catch_amalgamated.hpp>

#include <homplate/corrector.hpp>

#include "oracles.hpp"

#include <cstdio>
#include <random>

using namespace homplate;

namespace {

CellGeometry laminate_y3() {
    CellGeometry g;
    PhasePrimitive top;
    top.kind = PhasePrimitive::Kind::Slab;
    top.phase = 1;
    top.z0 = 0.0;
    top.z1 = 1.0;
    g.primitives.push_back(top);
    return g;
}

// Symmetric three-layer laminate: stiff core, soft skins (even in y3).
CellGeometry sandwich() {
    CellGeometry g;
    PhasePrimitive core;
    core.kind = PhasePrimitive::Kind::Slab;
    core.phase = 1;
    core.z0 = -0.5;
    core.z1 = 0.5;
    g.primitives.push_back(core);
    return g;
}

PhaseAssignment two_isotropic() {
    PhaseAssignment p;
    p.phases = {HookeTensor::isotropic(2.0, 1.0), HookeTensor::isotropic(8.0, 5.0)};
    return p;
}

Eigen::VectorXd translation_vector(const CellMesh& mesh, const DofMap& dofs, int comp) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(dofs.n_dofs());
    for (int s = 0; s < dofs.n_sys_nodes; ++s)
        if (dofs.sys_node[static_cast<size_t>(s)] < mesh.n_corner_nodes()) t[3 * s + comp] = 1.0;
    return t;
}

// Discrete pullback under the thickness reflection y3 -> -y3 composed with
// the vector reflection diag(1,1,-1); an involution on the DOF space.
Eigen::VectorXd reflect_y3(const CellMesh& mesh, const DofMap& dofs,
                           const Eigen::VectorXd& u) {
    const auto res = mesh.resolution();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(u.size());
    for (int k = 0; k <= res[2]; ++k)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i < res[0]; ++i) {
                const int a = dofs.node_sys[static_cast<size_t>(mesh.corner_node(i, j, k))];
                const int b =
                    dofs.node_sys[static_cast<size_t>(mesh.corner_node(i, j, res[2] - k))];
                if (a < 0 || b < 0) continue;
                v[3 * a + 0] = u[3 * b + 0];
                v[3 * a + 1] = u[3 * b + 1];
                v[3 * a + 2] = -u[3 * b + 2];
            }
    for (int k = 0; k < res[2]; ++k)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i < res[0]; ++i) {
                const int a = dofs.node_sys[static_cast<size_t>(mesh.edge_dof(i, j, k))];
                const int b =
                    dofs.node_sys[static_cast<size_t>(mesh.edge_dof(i, j, res[2] - 1 - k))];
                if (a < 0 || b < 0) continue;
                v[3 * a + 0] = u[3 * b + 0];
                v[3 * a + 1] = u[3 * b + 1];
                v[3 * a + 2] = -u[3 * b + 2];
            }
    return v;
}

}  // namespace

TEST_CASE("translations span the stiffness kernel", "[corrector]") {
    CellMesh mesh = build_cell_mesh(CellGeometry{}, {3, 3, 3});
    DofMap dofs = periodic_dof_map(mesh);
    PhaseAssignment phases;
    phases.phases = {HookeTensor::isotropic(1.0, 1.0)};
    const SpMat k = assemble_cell_stiffness(mesh, phases, dofs);

    const Eigen::MatrixXd kd0 = Eigen::MatrixXd(k);
    CHECK((kd0 - kd0.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd t = translation_vector(mesh, dofs, c);
        CHECK((k * t).cwiseAbs().maxCoeff() < 1e-12);
    }

    // small-eigenvalue audit: exactly 3 near-zero eigenvalues
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kd0);
    int near_zero = 0;
    for (int i = 0; i < kd0.rows(); ++i)
        if (std::abs(es.eigenvalues()[i]) < 1e-9) ++near_zero;
    CHECK(near_zero == 3);
    CHECK(es.eigenvalues()[3] > 1e-6);
}

TEST_CASE("laminate energy of a hand-built affine field matches closed form", "[corrector]") {
    CellMesh mesh = build_cell_mesh(laminate_y3(), {2, 2, 4});
    DofMap dofs = periodic_dof_map(mesh);
    const PhaseAssignment phases = two_isotropic();
    const SpMat k = assemble_cell_stiffness(mesh, phases, dofs);

    // u = (0,0,g(y3)) with g piecewise linear: slope 1 below, -0.5 above 0.
    auto slope = [&](int layer) { return layer < 2 ? 1.0 : -0.5; };
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.n_dofs());
    const auto res = mesh.resolution();
    double g = 0.0;
    std::vector<double> gval(static_cast<size_t>(res[2] + 1), 0.0);
    for (int kk = 1; kk <= res[2]; ++kk) {
        g += slope(kk - 1) * mesh.spacing()[2];
        gval[static_cast<size_t>(kk)] = g;
    }
    for (int kk = 0; kk <= res[2]; ++kk)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i < res[0]; ++i)
                u[3 * dofs.node_sys[static_cast<size_t>(mesh.corner_node(i, j, kk))] + 2] =
                    gval[static_cast<size_t>(kk)];

    // per layer: (lambda + 2 mu) * slope^2 * layer volume
    double expect = 0.0;
    for (int kk = 0; kk < res[2]; ++kk) {
        const auto& h = phases.phases[kk < 2 ? 0 : 1];
        const double l = h.voigt(0, 1) * 2.0;            // lambda
        const double m = h.voigt(3, 3) * 2.0;            // mu
        expect += (l + 2.0 * m) * slope(kk) * slope(kk) * mesh.spacing()[2];
    }
    CHECK(u.dot(k * u) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("corrector loads: resultants, parity, high-order quadrature", "[corrector]") {
    CellMesh mesh = build_cell_mesh(sandwich(), {3, 3, 4});
    DofMap dofs = periodic_dof_map(mesh);
    const PhaseAssignment phases = two_isotropic();

    for (int m = 0; m < 6; ++m) {
        const Eigen::VectorXd rhs = corrector_rhs(mesh, phases, dofs, corrector_mode(m));
        // zero resultant: constant stress has no net force
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(rhs.dot(translation_vector(mesh, dofs, c))) < 1e-12);
    }

    // parity under the thickness reflection on the y3-symmetric sandwich:
    // membrane loads are even functionals, bending loads odd
    std::mt19937_64 rng(41);
    std::normal_distribution<double> n01(0.0, 1.0);
    Eigen::VectorXd w(dofs.n_dofs());
    for (int i = 0; i < w.size(); ++i) w[i] = n01(rng);
    const Eigen::VectorXd pw = reflect_y3(mesh, dofs, w);
    for (int b = 0; b < 3; ++b) {
        const Eigen::VectorXd lm = corrector_rhs(mesh, phases, dofs, corrector_mode(b));
        const Eigen::VectorXd lb = corrector_rhs(mesh, phases, dofs, corrector_mode(b + 3));
        CHECK(std::abs(lm.dot(pw) - lm.dot(w)) < 1e-10 * w.norm());
        CHECK(std::abs(lb.dot(pw) + lb.dot(w)) < 1e-10 * w.norm());
    }

    // independent 4x4x4 Gauss quadrature of the same load integrals
    const double gp[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                          0.8611363115940526};
    const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                          0.3478548451374538};
    const Vec3 h = mesh.spacing();
    const double jac = mesh.element_volume() / 8.0;
    for (int m : {0, 4}) {
        const CorrectorMode mode = corrector_mode(m);
        Eigen::VectorXd ref = Eigen::VectorXd::Zero(dofs.n_dofs());
        for (int e = 0; e < mesh.n_elements(); ++e) {
            if (!mesh.element_material(e)) continue;
            const Mat6 ce = phases.hooke(mesh.element_phase(e)).elastic_matrix();
            const auto nodes = mesh.element_nodes(e);
            for (int qa = 0; qa < 4; ++qa)
                for (int qb = 0; qb < 4; ++qb)
                    for (int qc = 0; qc < 4; ++qc) {
                        const Vec3 xi(gp[qa], gp[qb], gp[qc]);
                        const double wq = gw[qa] * gw[qb] * gw[qc] * jac;
                        const auto bm = detail::strain_matrix(detail::cell_shape_grad(xi), h);
                        const Vec6 sv = mode.strain(mesh.point(e, xi)[2]).voigt();
                        const Eigen::Matrix<double, 36, 1> fe =
                            -wq * (bm.transpose() * (ce * sv));
                        for (int a = 0; a < 12; ++a)
                            for (int c = 0; c < 3; ++c)
                                ref[dofs.dof(nodes[a], c)] += fe[3 * a + c];
                    }
        }
        const Eigen::VectorXd rhs = corrector_rhs(mesh, phases, dofs, mode);
        CHECK((rhs - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("homogeneous correctors match the condensation profile", "[corrector]") {
    CellMesh mesh = build_cell_mesh(CellGeometry{}, {4, 4, 4});
    DofMap dofs = periodic_dof_map(mesh);
    PhaseAssignment phases;
    phases.phases = {HookeTensor::isotropic(2.0, 1.0)};
    const SpMat k = assemble_cell_stiffness(mesh, phases, dofs);
    const CorrectorSet set = solve_correctors(k, mesh, phases, dofs, 1e-12);

    const auto& gauss = detail::cell_gauss();
    for (int p = 0; p < 3; ++p) {
        const Vec3 vk(plane_basis(p).c[0], plane_basis(p).c[1], 2.0 * plane_basis(p).c[5]);
        const Vec3 vf = oracles::condensation_profile(phases.phases[0], vk);
        for (int e = 0; e < mesh.n_elements(); ++e)
            for (const auto& xi : gauss.points) {
                const double y3 = mesh.point(e, xi)[2];
                // membrane strain: constant out-of-plane profile
                const Vec6 em = field_strain(mesh, dofs, set.fields[p], e, xi).voigt();
                CHECK(std::abs(em[0]) + std::abs(em[1]) + std::abs(em[5]) < 1e-8);
                CHECK(std::abs(em[2] - vf[0]) < 1e-8);
                CHECK(std::abs(em[3] - vf[1]) < 1e-8);
                CHECK(std::abs(em[4] - vf[2]) < 1e-8);
                // bending strain: -y3 times the same profile
                const Vec6 eb = field_strain(mesh, dofs, set.fields[p + 3], e, xi).voigt();
                CHECK(std::abs(eb[2] + y3 * vf[0]) < 1e-8);
                CHECK(std::abs(eb[0]) + std::abs(eb[1]) + std::abs(eb[5]) < 1e-8);
            }
    }
}

TEST_CASE("Galerkin orthogonality replay", "[corrector][acceptance3]") {
    CellMesh mesh = build_cell_mesh(laminate_y3(), {8, 8, 8});
    DofMap dofs = periodic_dof_map(mesh);
    const PhaseAssignment phases = two_isotropic();
    const SpMat k = assemble_cell_stiffness(mesh, phases, dofs);
    const CorrectorSet set = solve_correctors(k, mesh, phases, dofs, 1e-11);

    std::mt19937_64 rng(43);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int m = 0; m < 6; ++m) {
        const Eigen::VectorXd rhs = corrector_rhs(mesh, phases, dofs, corrector_mode(m));
        const Eigen::VectorXd res = k * set.fields[static_cast<size_t>(m)] - rhs;
        for (int t = 0; t < 100; ++t) {
            Eigen::VectorXd w(dofs.n_dofs());
            for (int i = 0; i < w.size(); ++i) w[i] = n01(rng);
            const double energy_norm = std::sqrt(w.dot(k * w));
            CHECK(std::abs(w.dot(res)) <= 1e-9 * energy_norm);
        }
    }
}

TEST_CASE("zero mean and mirror symmetry of correctors", "[corrector]") {
    CellMesh mesh = build_cell_mesh(sandwich(), {3, 3, 4});
    DofMap dofs = periodic_dof_map(mesh);
    const PhaseAssignment phases = two_isotropic();
    const SpMat k = assemble_cell_stiffness(mesh, phases, dofs);
    const CorrectorSet set = solve_correctors(k, mesh, phases, dofs, 1e-12);

    for (int m = 0; m < 6; ++m) {
        // volumetric zero mean per component
        for (int c = 0; c < 3; ++c) {
            std::vector<double> nodal(static_cast<size_t>(mesh.n_nodes()), 0.0);
            for (int s = 0; s < dofs.n_sys_nodes; ++s)
                nodal[static_cast<size_t>(dofs.sys_node[static_cast<size_t>(s)])] =
                    set.fields[static_cast<size_t>(m)][3 * s + c];
            CHECK(std::abs(mesh.integrate(nodal)) < 1e-12);
        }
        // chi^m even / chi^b odd under the thickness reflection
        const Eigen::VectorXd refl =
            reflect_y3(mesh, dofs, set.fields[static_cast<size_t>(m)]);
        const double sign = m < 3 ? 1.0 : -1.0;
        CHECK((set.fields[static_cast<size_t>(m)] - sign * refl).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("correctors invariant under material scaling", "[corrector]") {
    CellMesh mesh = build_cell_mesh(laminate_y3(), {3, 3, 3});
    DofMap dofs = periodic_dof_map(mesh);
    PhaseAssignment p1 = two_isotropic();
    PhaseAssignment p2 = p1;
    for (auto& h : p2.phases) h.voigt *= 7.5;
    const CorrectorSet s1 =
        solve_correctors(assemble_cell_stiffness(mesh, p1, dofs), mesh, p1, dofs, 1e-12);
    const CorrectorSet s2 =
        solve_correctors(assemble_cell_stiffness(mesh, p2, dofs), mesh, p2, dofs, 1e-12);
    for (int m = 0; m < 6; ++m)
        CHECK((s1.fields[static_cast<size_t>(m)] - s2.fields[static_cast<size_t>(m)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
}

TEST_CASE("corrector cache round trip", "[corrector]") {
    CellMesh mesh = build_cell_mesh(laminate_y3(), {2, 2, 2});
    DofMap dofs = periodic_dof_map(mesh);
    const PhaseAssignment phases = two_isotropic();
    const CorrectorSet set =
        solve_correctors(assemble_cell_stiffness(mesh, phases, dofs), mesh, phases, dofs, 1e-12);

    const std::string path = "cache_roundtrip.bin";
    const uint64_t key = fnv1a_str("laminate-2x2x2-1e-12");
    REQUIRE(save_correctors(path, key, set));

    const auto loaded = load_correctors(path, key, dofs.n_dofs());
    REQUIRE(loaded.has_value());
    for (int m = 0; m < 6; ++m)
        CHECK((loaded->fields[static_cast<size_t>(m)] - set.fields[static_cast<size_t>(m)])
                  .norm() == 0.0);

    CHECK_FALSE(load_correctors(path, key + 1, dofs.n_dofs()).has_value());
    CHECK_FALSE(load_correctors(path, key, dofs.n_dofs() + 3).has_value());
    CHECK_FALSE(load_correctors("missing_file.bin", key, dofs.n_dofs()).has_value());
    std::remove(path.c_str());
}
