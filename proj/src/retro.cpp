#include "fluortraj/retro.hpp"

#include <cmath>

#include "fluortraj/dynamics.hpp"
#include "fluortraj/error.hpp"

namespace fluortraj {

RetroState time_reverse(const BlochVector& q) { return {-q.x, -q.y, -q.z}; }

RetroState retro_update(const RetroState& s, const KrausSet& ks) {
    if (ks.scheme != Scheme::Homodyne && ks.scheme != Scheme::HomodyneInefficient)
        throw Error(ErrorKind::Unsupported, "retrodiction is implemented for homodyne only");
    const Matrix2c rho = bloch_to_density(checked_ball(s.bloch())).matrix();
    Matrix2c out = Matrix2c::Zero();
    for (const auto& op : ks.ops()) out += op.m.adjoint() * rho * op.m;
    const double tr = out.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr))
        throw Error(ErrorKind::ImpossibleOutcome, "retrodicted update has zero weight");
    out /= tr;
    out = 0.5 * (out + out.adjoint()).eval();
    return RetroState::from(checked_ball(density_to_bloch(DensityMatrix(out))));
}

Vec3 retro_rhs(const RetroState& s, double r, double theta, double gamma) {
    const double x = s.x, y = s.y, z = s.z;
    const double c = std::cos(theta), sn = std::sin(theta), k = r * std::sqrt(gamma);
    return {0.5 * gamma * x * z + k * ((1.0 - z - x * x) * c + x * y * sn),
            0.5 * gamma * y * z + k * ((y * y + z - 1.0) * sn - x * y * c),
            0.5 * gamma * (z * z - 1.0) + k * (1.0 - z) * (-y * sn + x * c)};
}

double reversal_symmetry_residual(const BlochVector& q, double r, double theta, double gamma) {
    SchemeConfig cfg;
    cfg.scheme = Scheme::Homodyne;
    cfg.gamma = gamma;
    cfg.theta = theta;
    const Vec3 fwd = kraus_rhs(q, Readout{Dyne{r}, cfg.dt}, cfg);
    // retrodicted velocity at the negated point
    const Vec3 back = retro_rhs(time_reverse(q), r, theta, gamma);
    return (back - fwd).cwiseAbs().maxCoeff();
}

std::vector<RetroState> retro_run(const RetroState& start, const std::vector<Readout>& readouts,
                                  const SchemeConfig& cfg) {
    std::vector<RetroState> out{start};
    out.reserve(readouts.size() + 1);
    for (auto it = readouts.rbegin(); it != readouts.rend(); ++it)
        out.push_back(retro_update(out.back(), kraus_for(cfg, *it)));
    return out;
}

}  // namespace fluortraj
