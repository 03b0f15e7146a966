#pragma once

// Tensor algebra, material laws, strain measures and pointwise energy
// densities shared by every solver in the library.
//
// Conventions (used everywhere downstream):
//  * Voigt component order (11,22,33,23,13,12).
//  * Strain-like Voigt vectors carry engineering doubling on the shear
//    entries, so a(S,T) = voigt(S)^T A voigt(T).
//  * Q(S) = a : S : S is the full stored energy density (no extra 1/2).
//    The Euler-Lagrange bilinear form therefore carries a factor 2, which
//    assembly routines track centrally via elastic_matrix().

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace homplate {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// 3x3 symmetric matrix stored by its six independent components,
/// order (11,22,33,23,13,12).
struct SymMat3 {
    Vec6 c = Vec6::Zero();

    SymMat3() = default;
    explicit SymMat3(const Vec6& v) : c(v) {}

    static SymMat3 from_matrix(const Mat3& m) {
        SymMat3 s;
        s.c << m(0, 0), m(1, 1), m(2, 2),
            0.5 * (m(1, 2) + m(2, 1)),
            0.5 * (m(0, 2) + m(2, 0)),
            0.5 * (m(0, 1) + m(1, 0));
        return s;
    }

    Mat3 to_matrix() const {
        Mat3 m;
        m << c[0], c[5], c[4],
             c[5], c[1], c[3],
             c[4], c[3], c[2];
        return m;
    }

    /// Strain-like Voigt vector: engineering doubling on shear entries.
    Vec6 voigt() const {
        Vec6 v = c;
        v[3] *= 2.0;
        v[4] *= 2.0;
        v[5] *= 2.0;
        return v;
    }

    double trace() const { return c[0] + c[1] + c[2]; }

    double frobenius_norm() const {
        return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] +
                         2.0 * (c[3] * c[3] + c[4] * c[4] + c[5] * c[5]));
    }

    SymMat3 operator+(const SymMat3& o) const { return SymMat3(c + o.c); }
    SymMat3 operator-(const SymMat3& o) const { return SymMat3(c - o.c); }
    SymMat3 operator*(double s) const { return SymMat3(c * s); }
};

inline SymMat3 sym(const Mat3& f) { return SymMat3::from_matrix(f); }

inline Mat3 skew(const Mat3& f) { return 0.5 * (f - f.transpose()); }

/// Green-St. Venant strain E(F) = (F^T F - I)/2; vanishes on SO(3).
inline SymMat3 green_strain(const Mat3& f) {
    return SymMat3::from_matrix(0.5 * (f.transpose() * f - Mat3::Identity()));
}

/// Linearized strain e(u) = sym(grad u); alias so solver code reads like
/// the continuum formulas.
inline SymMat3 lin_strain(const Mat3& grad) { return sym(grad); }

/// Both sides of the identity (1/h) E(I + hG) = e(G) + (h/2) G^T G.
/// They agree to machine precision for every G and h > 0.
inline std::pair<SymMat3, SymMat3> gsv_identity_check(const Mat3& g, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("gsv_identity_check: h must be > 0");
    const Mat3 f = Mat3::Identity() + h * g;
    SymMat3 lhs = green_strain(f);
    lhs.c /= h;
    const SymMat3 rhs =
        SymMat3::from_matrix(0.5 * (g + g.transpose()) + 0.5 * h * (g.transpose() * g));
    return {lhs, rhs};
}

/// dist(F, SO(3)) via singular values. For det F > 0 this equals
/// |F - R|_F with R the polar factor; for det F <= 0 the smallest
/// singular value enters with flipped sign.
inline double rigidity_distance(const Mat3& f) {
    Eigen::JacobiSVD<Mat3> svd(f);
    Vec3 s = svd.singularValues();  // descending
    const double sign = (f.determinant() > 0.0) ? 1.0 : -1.0;
    const double d0 = s[0] - 1.0;
    const double d1 = s[1] - 1.0;
    const double d2 = sign * s[2] - 1.0;
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

/// Fourth-order elasticity tensor with minor/major symmetries, stored as a
/// symmetric 6x6 matrix such that Q(S) = voigt(S)^T A voigt(S).
struct HookeTensor {
    Mat6 voigt = Mat6::Zero();

    HookeTensor() = default;
    explicit HookeTensor(const Mat6& m) : voigt(0.5 * (m + m.transpose())) {}

    /// Q(S) = (lambda/2) (tr S)^2 + mu |S|_F^2, i.e. the St. Venant-Kirchhoff
    /// density when composed with the Green strain.
    static HookeTensor isotropic(double lambda, double mu) {
        Mat6 m = Mat6::Zero();
        m.topLeftCorner<3, 3>().setConstant(0.5 * lambda);
        m.diagonal() << 0.5 * lambda + mu, 0.5 * lambda + mu, 0.5 * lambda + mu,
            0.5 * mu, 0.5 * mu, 0.5 * mu;
        return HookeTensor(m);
    }

    double quadratic(const SymMat3& s) const {
        const Vec6 v = s.voigt();
        return v.dot(voigt * v);
    }

    /// Polarization a(S,T); symmetric by the major symmetry.
    double bilinear(const SymMat3& s, const SymMat3& t) const {
        return s.voigt().dot(voigt * t.voigt());
    }

    /// Component a_ijkl reconstructed from the Voigt storage.
    double component(int i, int j, int k, int l) const {
        return voigt(voigt_index(i, j), voigt_index(k, l));
    }

    static int voigt_index(int i, int j) {
        if (i == j) return i;
        const int s = i + j;       // 23,13,12 -> 3,4,5
        return s == 3 ? 3 : (s == 2 ? 4 : 5);
    }

    /// Representation w.r.t. an orthonormal basis of Sym(3); its eigenvalues
    /// are the coercivity spectrum of Q against |S|_F^2.
    Mat6 mandel() const {
        Vec6 d;
        const double r2 = std::sqrt(2.0);
        d << 1, 1, 1, r2, r2, r2;
        return d.asDiagonal() * voigt * d.asDiagonal();
    }

    /// Largest K0 with Q(S) >= K0 |S|_F^2.
    double coercivity_constant() const {
        Eigen::SelfAdjointEigenSolver<Mat6> es(mandel());
        return es.eigenvalues().minCoeff();
    }

    bool coercive(double k0_min = 0.0) const { return coercivity_constant() > k0_min; }

    /// Stiffness matrix of the Euler-Lagrange bilinear form 2 a(.,.) in the
    /// engineering-strain convention; this is what element routines contract
    /// B-matrices with.
    Mat6 elastic_matrix() const { return 2.0 * voigt; }
};

/// Isotropic phase description (Lame parameters).
struct IsotropicPhase {
    double lambda = 0.0;
    double mu = 0.0;
    HookeTensor hooke() const { return HookeTensor::isotropic(lambda, mu); }
};

/// Extended-real energy value: the +infinity branch of the nonlinear density
/// is an explicit tag, not a large float.
struct ExtReal {
    double value = 0.0;
    bool finite = true;

    static ExtReal infinite() { return {0.0, false}; }
    ExtReal& operator+=(const ExtReal& o) {
        if (!o.finite) finite = false;
        value += o.value;
        return *this;
    }
};

/// Nonlinear (St. Venant-Kirchhoff type) density W(F) = Q(E(F)) for
/// det F > 0, +infinity otherwise.
inline ExtReal nonlinear_density(const HookeTensor& a, const Mat3& f) {
    if (!(f.determinant() > 0.0)) return ExtReal::infinite();
    return {a.quadratic(green_strain(f)), true};
}

/// M^{np}_{kl} = (delta_kn delta_lp + delta_kp delta_ln)/2.
inline SymMat3 basis_matrix(int n, int p) {
    Mat3 m = Mat3::Zero();
    m(n - 1, p - 1) += 0.5;
    m(p - 1, n - 1) += 0.5;
    return SymMat3::from_matrix(m);
}

/// In-plane strain basis used for plate quantities: {M11, M22, 2 M12}, so a
/// coefficient vector (e11, e22, e12) reproduces the matrix entries directly.
inline SymMat3 plane_basis(int k) {
    switch (k) {
        case 0: return basis_matrix(1, 1);
        case 1: return basis_matrix(2, 2);
        case 2: { SymMat3 m = basis_matrix(1, 2); m.c *= 2.0; return m; }
        default: throw std::out_of_range("plane_basis: index must be 0..2");
    }
}

inline Mat3 rotation_about(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

/// Random coercive Hooke tensor (test utility; deterministic in the engine).
inline HookeTensor random_hooke(std::mt19937_64& rng, double k0 = 0.5) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat6 g;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) g(i, j) = n(rng);
    Mat6 mandel = g * g.transpose() + k0 * Mat6::Identity();
    Vec6 d;
    const double r2 = std::sqrt(2.0);
    d << 1, 1, 1, 1.0 / r2, 1.0 / r2, 1.0 / r2;
    return HookeTensor(d.asDiagonal() * mandel * d.asDiagonal());
}

}  // namespace homplate
