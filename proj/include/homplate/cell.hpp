#pragma once

// Reference cell geometry and meshing. The cell is fixed to
// Y x (-1,1) with Y the unit square; the mesh is a structured hexahedral
// grid, periodic in-plane (y1, y2), free on the top/bottom faces.
//
// Elements carry the phase id sampled at their centroid. Perforations are
// modeled by omitting void elements from assembly; nodes touched only by
// void elements are excluded from the algebraic system.
//
// Through the thickness the displacement space is enriched by one
// hierarchical quadratic bubble per vertical element edge, so the element
// spans (linear x linear x quadratic) polynomials. Affine and quadratic
// in-y3 corrector profiles of homogeneous and y3-laminated materials are
// then represented exactly.

#include "core.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace homplate {

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhasePrimitive {
    enum class Kind { Box, CylinderZ, Slab };
    Kind kind = Kind::Box;
    int phase = 0;
    Vec3 lo = Vec3::Zero();   // Box corners, cell coordinates
    Vec3 hi = Vec3::Zero();
    double c1 = 0.5, c2 = 0.5, r = 0.0;  // CylinderZ: axis-parallel to y3
    double z0 = -1.0, z1 = 1.0;          // Slab / cylinder extent in y3

    bool contains(const Vec3& y) const {
        switch (kind) {
            case Kind::Box:
                return y[0] >= lo[0] && y[0] <= hi[0] && y[1] >= lo[1] && y[1] <= hi[1] &&
                       y[2] >= lo[2] && y[2] <= hi[2];
            case Kind::CylinderZ: {
                const double d1 = y[0] - c1, d2 = y[1] - c2;
                return d1 * d1 + d2 * d2 <= r * r && y[2] >= z0 && y[2] <= z1;
            }
            case Kind::Slab:
                return y[2] >= z0 && y[2] <= z1;
        }
        return false;
    }
};

/// Phase map over the reference cell; later primitives override earlier ones.
struct CellGeometry {
    int default_phase = 0;
    std::vector<PhasePrimitive> primitives;
    int void_phase = -1;  // < 0: no perforation

    int phase_at(const Vec3& y) const {
        int p = default_phase;
        for (const auto& prim : primitives)
            if (prim.contains(y)) p = prim.phase;
        return p;
    }

    bool is_void(int phase) const { return void_phase >= 0 && phase == void_phase; }
    bool perforated() const { return void_phase >= 0; }
};

/// Per-phase material assignment; every material phase maps to a coercive
/// Hooke tensor.
struct PhaseAssignment {
    std::vector<HookeTensor> phases;

    const HookeTensor& hooke(int phase) const {
        if (phase < 0 || phase >= static_cast<int>(phases.size()))
            throw GeometryError("phase id " + std::to_string(phase) + " has no material");
        return phases[static_cast<size_t>(phase)];
    }

    void validate_coercive(double k0_min = 0.0) const {
        for (size_t i = 0; i < phases.size(); ++i)
            if (!phases[i].coercive(k0_min))
                throw GeometryError("phase " + std::to_string(i) + " is not coercive");
    }
};

namespace detail {

// 12-node shape functions on [-1,1]^3: 8 trilinear corners followed by
// 4 vertical-edge bubbles (1 - xi3^2) with bilinear in-plane weight.
inline std::array<double, 12> cell_shape(const Vec3& xi) {
    std::array<double, 12> n{};
    static const int sgn[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (int a = 0; a < 4; ++a) {
        const double w = 0.25 * (1.0 + sgn[a][0] * xi[0]) * (1.0 + sgn[a][1] * xi[1]);
        n[a] = 0.5 * w * (1.0 - xi[2]);
        n[a + 4] = 0.5 * w * (1.0 + xi[2]);
        n[a + 8] = w * (1.0 - xi[2] * xi[2]);
    }
    return n;
}

inline std::array<Vec3, 12> cell_shape_grad(const Vec3& xi) {
    std::array<Vec3, 12> g{};
    static const int sgn[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (int a = 0; a < 4; ++a) {
        const double s1 = sgn[a][0], s2 = sgn[a][1];
        const double w = 0.25 * (1.0 + s1 * xi[0]) * (1.0 + s2 * xi[1]);
        const double dw1 = 0.25 * s1 * (1.0 + s2 * xi[1]);
        const double dw2 = 0.25 * s2 * (1.0 + s1 * xi[0]);
        g[a] = Vec3(dw1 * 0.5 * (1.0 - xi[2]), dw2 * 0.5 * (1.0 - xi[2]), -0.5 * w);
        g[a + 4] = Vec3(dw1 * 0.5 * (1.0 + xi[2]), dw2 * 0.5 * (1.0 + xi[2]), 0.5 * w);
        g[a + 8] = Vec3(dw1 * (1.0 - xi[2] * xi[2]), dw2 * (1.0 - xi[2] * xi[2]),
                        -2.0 * xi[2] * w);
    }
    return g;
}

struct GaussRule {
    std::vector<Vec3> points;
    std::vector<double> weights;  // reference weights, sum = 8
};

// 2x2x3 tensor Gauss rule; exact for the products of enriched shapes.
inline const GaussRule& cell_gauss() {
    static const GaussRule rule = [] {
        GaussRule r;
        const double g2 = 1.0 / std::sqrt(3.0);
        const double g3 = std::sqrt(3.0 / 5.0);
        const double p2[2] = {-g2, g2};
        const double p3[3] = {-g3, 0.0, g3};
        const double w3[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i) {
                    r.points.emplace_back(p2[i], p2[j], p3[k]);
                    r.weights.push_back(1.0 * 1.0 * w3[k]);
                }
        return r;
    }();
    return rule;
}

}  // namespace detail

/// Structured periodic mesh of the reference cell.
///
/// Glued node numbering: corner node (i,j,k) with i in [0,n1], j in [0,n2],
/// k in [0,n3] maps to (i mod n1) + n1*((j mod n2) + n2*k); vertical-edge
/// bubble DOFs follow the corner block with one entry per element layer.
class CellMesh {
  public:
    CellMesh(const CellGeometry& geom, std::array<int, 3> resolution)
        : geom_(geom), res_(resolution) {
        if (res_[0] < 2 || res_[1] < 2 || res_[2] < 2)
            throw GeometryError("cell resolution must be >= 2 per direction");
        h_ = Vec3(1.0 / res_[0], 1.0 / res_[1], 2.0 / res_[2]);
        sample_phases();
        check_connectivity();
        mark_active_nodes();
    }

    const CellGeometry& geometry() const { return geom_; }
    const std::array<int, 3>& resolution() const { return res_; }
    Vec3 spacing() const { return h_; }

    int n_elements() const { return res_[0] * res_[1] * res_[2]; }
    int n_corner_nodes() const { return res_[0] * res_[1] * (res_[2] + 1); }
    int n_edge_dofs() const { return res_[0] * res_[1] * res_[2]; }
    int n_nodes() const { return n_corner_nodes() + n_edge_dofs(); }
    int n_raw_corner_nodes() const { return (res_[0] + 1) * (res_[1] + 1) * (res_[2] + 1); }

    double element_volume() const { return h_[0] * h_[1] * h_[2]; }
    double cell_volume() const { return 2.0; }
    double material_volume() const { return element_volume() * n_material_elements_; }
    int n_material_elements() const { return n_material_elements_; }
    double material_fraction() const {
        return static_cast<double>(n_material_elements_) / n_elements();
    }

    int element_index(int i, int j, int k) const { return i + res_[0] * (j + res_[1] * k); }

    std::array<int, 3> element_ijk(int e) const {
        const int i = e % res_[0];
        const int j = (e / res_[0]) % res_[1];
        const int k = e / (res_[0] * res_[1]);
        return {i, j, k};
    }

    int corner_node(int i, int j, int k) const {
        return (i % res_[0]) + res_[0] * ((j % res_[1]) + res_[1] * k);
    }

    int edge_dof(int i, int j, int k) const {
        return n_corner_nodes() + (i % res_[0]) + res_[0] * ((j % res_[1]) + res_[1] * k);
    }

    /// Global ids of the 12 local nodes of an element (8 corners, 4 bubbles).
    std::array<int, 12> element_nodes(int e) const {
        const auto [i, j, k] = element_ijk(e);
        return {corner_node(i, j, k),         corner_node(i + 1, j, k),
                corner_node(i + 1, j + 1, k), corner_node(i, j + 1, k),
                corner_node(i, j, k + 1),     corner_node(i + 1, j, k + 1),
                corner_node(i + 1, j + 1, k + 1), corner_node(i, j + 1, k + 1),
                edge_dof(i, j, k),            edge_dof(i + 1, j, k),
                edge_dof(i + 1, j + 1, k),    edge_dof(i, j + 1, k)};
    }

    Vec3 element_centroid(int e) const {
        const auto [i, j, k] = element_ijk(e);
        return Vec3((i + 0.5) * h_[0], (j + 0.5) * h_[1], -1.0 + (k + 0.5) * h_[2]);
    }

    Vec3 element_origin(int e) const {
        const auto [i, j, k] = element_ijk(e);
        return Vec3(i * h_[0], j * h_[1], -1.0 + k * h_[2]);
    }

    Vec3 point(int e, const Vec3& xi) const {
        const Vec3 o = element_origin(e);
        return o + 0.5 * (xi + Vec3::Ones()).cwiseProduct(h_);
    }

    int element_phase(int e) const { return elem_phase_[static_cast<size_t>(e)]; }
    bool element_material(int e) const { return material_[static_cast<size_t>(e)] != 0; }

    bool node_active(int n) const { return node_active_[static_cast<size_t>(n)] != 0; }
    int n_active_nodes() const { return n_active_nodes_; }

    /// Periodic partners of a raw corner node (i,j,k): all distinct raw grid
    /// positions glued to the same id. Empty for strictly interior nodes.
    std::vector<std::array<int, 3>> periodic_partners(int i, int j, int k) const {
        std::vector<std::array<int, 3>> out;
        const std::array<int, 2> is =
            (i == 0 || i == res_[0]) ? std::array<int, 2>{0, res_[0]} : std::array<int, 2>{i, i};
        const std::array<int, 2> js =
            (j == 0 || j == res_[1]) ? std::array<int, 2>{0, res_[1]} : std::array<int, 2>{j, j};
        for (int ii : {is[0], is[1]})
            for (int jj : {js[0], js[1]}) {
                if (ii == i && jj == j) continue;
                std::array<int, 3> p{ii, jj, k};
                bool seen = false;
                for (auto& q : out) seen = seen || q == p;
                if (!seen) out.push_back(p);
            }
        return out;
    }

    /// Integral of a nodal scalar field over the material region.
    double integrate(const std::vector<double>& nodal) const {
        const auto& gauss = detail::cell_gauss();
        const double jac = element_volume() / 8.0;
        double acc = 0.0;
        for (int e = 0; e < n_elements(); ++e) {
            if (!element_material(e)) continue;
            const auto nodes = element_nodes(e);
            for (size_t q = 0; q < gauss.points.size(); ++q) {
                const auto shp = detail::cell_shape(gauss.points[q]);
                double v = 0.0;
                for (int a = 0; a < 12; ++a) v += shp[a] * nodal[static_cast<size_t>(nodes[a])];
                acc += gauss.weights[q] * jac * v;
            }
        }
        return acc;
    }

  private:
    void sample_phases() {
        elem_phase_.resize(static_cast<size_t>(n_elements()));
        material_.resize(static_cast<size_t>(n_elements()));
        n_material_elements_ = 0;
        for (int e = 0; e < n_elements(); ++e) {
            const int p = geom_.phase_at(element_centroid(e));
            elem_phase_[static_cast<size_t>(e)] = p;
            const bool mat = !geom_.is_void(p);
            material_[static_cast<size_t>(e)] = mat ? 1 : 0;
            if (mat) ++n_material_elements_;
        }
        if (n_material_elements_ == 0) throw GeometryError("cell has no material elements");
    }

    // Flood fill on the element face graph. The base check treats the cell as
    // a plain subset (no wrap); with a void phase the doubled-cell check also
    // runs for each in-plane direction.
    void check_connectivity() const {
        const int comp = count_components(1, 1, false, false);
        if (comp > 1)
            throw GeometryError("material region is disconnected (" + std::to_string(comp) +
                                " components)");
        if (geom_.perforated()) {
            if (count_components(2, 1, false, false) > 1)
                throw GeometryError("material region disconnected across periodic faces in y1");
            if (count_components(1, 2, false, false) > 1)
                throw GeometryError("material region disconnected across periodic faces in y2");
        }
    }

    int count_components(int rep1, int rep2, bool wrap1, bool wrap2) const {
        const int m1 = res_[0] * rep1, m2 = res_[1] * rep2, m3 = res_[2];
        auto mat = [&](int i, int j, int k) {
            return material_[static_cast<size_t>(element_index(i % res_[0], j % res_[1], k))] != 0;
        };
        std::vector<uint8_t> seen(static_cast<size_t>(m1 * m2 * m3), 0);
        auto idx = [&](int i, int j, int k) { return i + m1 * (j + m2 * k); };
        int comps = 0;
        for (int s = 0; s < m1 * m2 * m3; ++s) {
            const int si = s % m1, sj = (s / m1) % m2, sk = s / (m1 * m2);
            if (seen[static_cast<size_t>(s)] || !mat(si, sj, sk)) continue;
            ++comps;
            std::queue<std::array<int, 3>> bfs;
            bfs.push({si, sj, sk});
            seen[static_cast<size_t>(s)] = 1;
            while (!bfs.empty()) {
                auto [i, j, k] = bfs.front();
                bfs.pop();
                const int di[6] = {1, -1, 0, 0, 0, 0};
                const int dj[6] = {0, 0, 1, -1, 0, 0};
                const int dk[6] = {0, 0, 0, 0, 1, -1};
                for (int d = 0; d < 6; ++d) {
                    int ni = i + di[d], nj = j + dj[d], nk = k + dk[d];
                    if (wrap1) ni = (ni + m1) % m1;
                    if (wrap2) nj = (nj + m2) % m2;
                    if (ni < 0 || ni >= m1 || nj < 0 || nj >= m2 || nk < 0 || nk >= m3) continue;
                    if (seen[static_cast<size_t>(idx(ni, nj, nk))] || !mat(ni, nj, nk)) continue;
                    seen[static_cast<size_t>(idx(ni, nj, nk))] = 1;
                    bfs.push({ni, nj, nk});
                }
            }
        }
        return comps;
    }

    void mark_active_nodes() {
        node_active_.assign(static_cast<size_t>(n_nodes()), 0);
        for (int e = 0; e < n_elements(); ++e) {
            if (!element_material(e)) continue;
            for (int n : element_nodes(e)) node_active_[static_cast<size_t>(n)] = 1;
        }
        n_active_nodes_ = 0;
        for (auto a : node_active_) n_active_nodes_ += a;
    }

    CellGeometry geom_;
    std::array<int, 3> res_;
    Vec3 h_;
    std::vector<int> elem_phase_;
    std::vector<uint8_t> material_;
    std::vector<uint8_t> node_active_;
    int n_material_elements_ = 0;
    int n_active_nodes_ = 0;
};

inline CellMesh build_cell_mesh(const CellGeometry& geom, std::array<int, 3> resolution) {
    return CellMesh(geom, resolution);
}

/// Compressed vector-valued DOF numbering over the active glued nodes.
/// Three scalar DOFs per active node; inactive (void-only) nodes carry no
/// system rows or columns.
struct DofMap {
    std::vector<int> node_sys;  // glued node -> compressed node index, -1 inactive
    std::vector<int> sys_node;  // inverse
    int n_sys_nodes = 0;

    explicit DofMap(const CellMesh& mesh) {
        node_sys.assign(static_cast<size_t>(mesh.n_nodes()), -1);
        for (int n = 0; n < mesh.n_nodes(); ++n) {
            if (mesh.node_active(n)) {
                node_sys[static_cast<size_t>(n)] = n_sys_nodes++;
                sys_node.push_back(n);
            }
        }
    }

    int n_dofs() const { return 3 * n_sys_nodes; }
    int dof(int glued_node, int comp) const {
        const int s = node_sys[static_cast<size_t>(glued_node)];
        return s < 0 ? -1 : 3 * s + comp;
    }
};

inline DofMap periodic_dof_map(const CellMesh& mesh) { return DofMap(mesh); }

}  // namespace homplate
