#pragma once

// Independent oracles used by the test suites. Everything here is computed
// by a different route than the library code it certifies: dense algebra,
// brute-force sampling, or higher-order quadrature.

#include <homplate/core.hpp>

#include <random>

namespace oracles {

using homplate::HookeTensor;
using homplate::Mat3;
using homplate::Mat6;
using homplate::Vec3;
using homplate::Vec6;

// Plane-stress condensation of a 6x6 Voigt Hooke matrix: eliminate the
// (33,23,13) stress components by a Schur complement. Returned in the 2D
// plate basis, i.e. W(e) = (e11,e22,e12)^T A2 (e11,e22,e12) is the condensed
// energy density (full density, no 1/2, matching the library convention).
inline Mat3 plane_stress_condensation(const HookeTensor& a) {
    // Kept strain-like variables (S11, S22, 2 S12), free (S33, 2 S23, 2 S13).
    const int keep[3] = {0, 1, 5};
    const int free_[3] = {2, 3, 4};
    Mat3 akk, akf, aff;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            akk(i, j) = a.voigt(keep[i], keep[j]);
            akf(i, j) = a.voigt(keep[i], free_[j]);
            aff(i, j) = a.voigt(free_[i], free_[j]);
        }
    const Mat3 schur = akk - akf * aff.inverse() * akf.transpose();
    // Re-express in (e11, e22, e12): the kept vector's third entry is 2 e12.
    const Mat3 d = Vec3(1.0, 1.0, 2.0).asDiagonal();
    return d * schur * d;
}

// Minimizing out-of-plane strain profile for a prescribed in-plane strain:
// returns (S33, 2 S23, 2 S13) minimizing Q with (S11, S22, 2 S12) = vk fixed.
inline Vec3 condensation_profile(const HookeTensor& a, const Vec3& vk) {
    const int keep[3] = {0, 1, 5};
    const int free_[3] = {2, 3, 4};
    Mat3 akf, aff;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            akf(i, j) = a.voigt(keep[i], free_[j]);
            aff(i, j) = a.voigt(free_[i], free_[j]);
        }
    return -aff.inverse() * akf.transpose() * vk;
}

// Brute-force distance to SO(3): minimum of |F - R|_F over n sampled
// rotations (uniform via quaternions).
inline double sampled_rotation_distance(const Mat3& f, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    double best = std::numeric_limits<double>::max();
    for (int i = 0; i < n; ++i) {
        Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
        q.normalize();
        best = std::min(best, (f - q.toRotationMatrix()).norm());
    }
    return best;
}

// Random matrix with independent N(0, s) entries.
inline Mat3 random_mat3(std::mt19937_64& rng, double s = 1.0) {
    std::normal_distribution<double> g(0.0, s);
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = g(rng);
    return m;
}

}  // namespace oracles
