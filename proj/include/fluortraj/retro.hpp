#pragma once

#include <vector>

#include "fluortraj/bloch.hpp"
#include "fluortraj/measure.hpp"

namespace fluortraj {

// Retrodicted Bloch coordinates, same conventions and invariants as BlochVector.
struct RetroState {
    double x = 0.0, y = 0.0, z = 0.0;

    BlochVector bloch() const { return {x, y, z}; }
    static RetroState from(const BlochVector& q) { return {q.x, q.y, q.z}; }
};

// Bloch negation: x -> -x, y -> -y, z -> -z.
RetroState time_reverse(const BlochVector& q);

// M^dag rho M / tr, summed over the operators of the set. Homodyne only.
RetroState retro_update(const RetroState& s, const KrausSet& ks);
Vec3 retro_rhs(const RetroState& s, double r, double theta, double gamma = 1.0);
// Max-norm gap between the reversed retrodicted equations and the forward homodyne ones.
double reversal_symmetry_residual(const BlochVector& q, double r, double theta, double gamma = 1.0);

// Runs retro_update through `readouts` in reverse order; returns every state, start first.
std::vector<RetroState> retro_run(const RetroState& start, const std::vector<Readout>& readouts,
                                  const SchemeConfig& cfg);

}  // namespace fluortraj
