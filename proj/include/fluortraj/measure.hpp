#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "fluortraj/bloch.hpp"
#include "fluortraj/rng.hpp"

namespace fluortraj {

enum class Scheme { Photodetect, Heterodyne, Homodyne, HomodyneInefficient };

const char* to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);

struct SchemeConfig {
    Scheme scheme = Scheme::Homodyne;
    double gamma = 1.0;
    double dt = 1e-3;
    double theta = 0.0;
    double eta = 1.0;
    double omega = 0.0;
    double delta = 0.0;

    double epsilon() const { return gamma * dt; }
    bool driven() const { return omega != 0.0 || delta != 0.0; }
    // Throws Config on eps outside (0,1), eta outside [0,1] or non-finite fields.
    void validate() const;
};

struct Jump {
    bool clicked = false;
};
struct Dyne {
    double r = 0.0;
};
struct DualDyne {
    double r_i = 0.0;
    double r_q = 0.0;
};

struct Readout {
    std::variant<Jump, Dyne, DualDyne> value;
    double dt = 0.0;
};

struct KrausOperator {
    std::string_view label;
    Matrix2c m;
};

struct KrausSet {
    Scheme scheme = Scheme::Homodyne;
    std::array<KrausOperator, 2> slots{};
    std::size_t count = 0;

    std::span<const KrausOperator> ops() const { return {slots.data(), count}; }
    const KrausOperator& operator[](std::size_t i) const { return slots[i]; }
};

KrausSet kraus_photodetect(const SchemeConfig& cfg);
KrausSet kraus_heterodyne(const SchemeConfig& cfg, const DualDyne& ro);
KrausSet kraus_homodyne(const SchemeConfig& cfg, const Dyne& ro);
KrausSet kraus_homodyne_inefficient(const SchemeConfig& cfg, const Dyne& ro);
// Dispatch on cfg.scheme. Homodyne with eta < 1 is built from the two-operator model.
KrausSet kraus_for(const SchemeConfig& cfg, const Readout& ro);

// branch: index of a single operator, or nullopt to sum over every operator in the set.
DensityMatrix apply_update(const DensityMatrix& rho, const KrausSet& ks,
                           std::optional<std::size_t> branch = std::nullopt);
// The branch selection the scheme prescribes for a sampled readout.
std::optional<std::size_t> branch_for(const SchemeConfig& cfg, const Readout& ro);

Matrix2c drive_unitary(const SchemeConfig& cfg);
DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix2c& u);

double click_probability(const BlochVector& q, const SchemeConfig& cfg);
// Mean of the dyne signal(s); one entry for homodyne, two for heterodyne.
std::array<double, 2> readout_mean(const BlochVector& q, const SchemeConfig& cfg);
double effective_eta(const SchemeConfig& cfg);

Readout sample_readout(const DensityMatrix& rho, const SchemeConfig& cfg, CounterRng& rng);
Readout sample_readout(const BlochVector& q, const SchemeConfig& cfg, CounterRng& rng);

double log_prob_rate(const BlochVector& q, const Readout& ro, const SchemeConfig& cfg);
double log_prob_rate(const DensityMatrix& rho, const Readout& ro, const SchemeConfig& cfg);
// ln of the readout density normalization, the C in p = exp(C + G dt + O(dt^2)).
double log_prob_offset(const SchemeConfig& cfg);

struct PovmReport {
    double deviation = 0.0;
    double scale = 1.0;          // fitted c; 1 for the schemes normalized to identity
    double nominal_scale = 1.0;  // sqrt(2 pi / dt) for the two-operator homodyne model
    Matrix2c integral = Matrix2c::Identity();
};

struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};
// Golub-Welsch rule for integral of exp(-s^2) f(s).
GaussHermite gauss_hermite(std::size_t n);

PovmReport povm_completeness(const SchemeConfig& cfg, std::size_t nodes = 200);

}  // namespace fluortraj
