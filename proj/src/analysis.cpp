#include "nli/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "nli/error.hpp"

namespace nli::analysis {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

// 99th percentile of chi-square with two degrees of freedom: the improvement
// a pure-noise data set gains from the two extra fringe regressors.
constexpr double kFringeSignificance = 9.2103;
constexpr int kMaxReweights = 30;
constexpr double kWeightFloor = 0.5;

bool invert(const Mat3& m, Mat3& inv) {
    const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    const double scale = m[0][0] * m[1][1] * m[2][2];
    if (!(std::abs(det) > 1e-12 * std::abs(scale)) || !std::isfinite(det)) return false;
    const double r = 1.0 / det;
    inv[0][0] = c00 * r;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * r;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * r;
    inv[1][0] = c01 * r;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * r;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * r;
    inv[2][0] = c02 * r;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * r;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * r;
    return true;
}

double quad(const Vec3& g, const Mat3& c) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += g[i] * c[i][j] * g[j];
    return std::max(s, 0.0);
}

double wrap_signed(double phi) {
    const double w = model::wrap_phase(phi);
    return w > model::kPi ? w - model::kTwoPi : w;
}

} // namespace

FringeFit fit_fringe(std::span<const double> phases, std::span<const double> counts,
                     model::Harmonic n) {
    if (phases.size() != counts.size())
        fail(ErrorKind::domain, "fringe fit needs one count per phase");
    if (phases.size() < 5) fail(ErrorKind::domain, "fringe fit needs at least 5 points");
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (!std::isfinite(phases[k])) fail(ErrorKind::domain, "fringe fit phases must be finite");
        if (!(counts[k] >= 0.0) || !std::isfinite(counts[k]))
            fail(ErrorKind::domain, "fringe fit counts must be finite and >= 0");
    }

    const double order = model::order(n);
    const std::size_t size = phases.size();
    std::vector<Vec3> rows(size);
    std::vector<double> weights(size);
    for (std::size_t k = 0; k < size; ++k) {
        rows[k] = {1.0, std::cos(order * phases[k]), std::sin(order * phases[k])};
        weights[k] = 1.0 / std::max(counts[k], 1.0);
    }

    // Start from data weights, then reweight by the fitted model. Weights
    // taken from the counts themselves pull the fit toward low bins.
    Mat3 cov{};
    Vec3 a{};
    for (int iter = 0; iter < kMaxReweights; ++iter) {
        Mat3 normal{};
        Vec3 rhs{};
        for (std::size_t k = 0; k < size; ++k)
            for (int i = 0; i < 3; ++i) {
                rhs[i] += weights[k] * rows[k][i] * counts[k];
                for (int j = 0; j < 3; ++j) normal[i][j] += weights[k] * rows[k][i] * rows[k][j];
            }
        if (!invert(normal, cov)) fail(ErrorKind::singular_fit, "degenerate phase set: singular design matrix");
        Vec3 next{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) next[i] += cov[i][j] * rhs[j];
        if (!(next[0] > 0.0)) fail(ErrorKind::singular_fit, "fitted mean count is not positive");
        const bool settled = iter > 0 && std::abs(next[0] - a[0]) <= 1e-10 * next[0] &&
                             std::hypot(next[1] - a[1], next[2] - a[2]) <= 1e-10 * next[0];
        a = next;
        if (settled) break;
        const double floor = std::max(kWeightFloor, 1e-3 * a[0]);
        for (std::size_t k = 0; k < size; ++k)
            weights[k] = 1.0 / std::max(a[0] + a[1] * rows[k][1] + a[2] * rows[k][2], floor);
    }

    const double r = std::hypot(a[1], a[2]);
    FringeFit fit;
    fit.harmonic = n;
    fit.amplitude = {2.0 * a[0], 2.0 * std::sqrt(std::max(cov[0][0], 0.0))};
    fit.visibility.value = r / a[0];
    fit.phase_offset.value = wrap_signed(std::atan2(-a[2], a[1]));
    if (r > 0.0) {
        const Vec3 dv{-r / (a[0] * a[0]), a[1] / (r * a[0]), a[2] / (r * a[0])};
        const Vec3 dphi{0.0, a[2] / (r * r), -a[1] / (r * r)};
        fit.visibility.sigma = std::sqrt(quad(dv, cov));
        fit.phase_offset.sigma = std::sqrt(quad(dphi, cov));
    } else {
        fit.visibility.sigma = std::sqrt(std::max(0.5 * (cov[1][1] + cov[2][2]), 0.0)) / a[0];
        fit.phase_offset.sigma = model::kPi;
    }
    fit.in_range = fit.visibility.value >= 0.0 && fit.visibility.value <= 1.0;

    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(size);
    const double flat_weight = 1.0 / std::max(mean, kWeightFloor);

    double ss = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
        const double model_count = a[0] + a[1] * rows[k][1] + a[2] * rows[k][2];
        const double resid = counts[k] - model_count;
        ss += resid * resid;
        fit.chi2 += weights[k] * resid * resid;
        fit.chi2_flat += flat_weight * (counts[k] - mean) * (counts[k] - mean);
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(size));
    return fit;
}

HarmonicChoice select_harmonic(std::span<const double> phases, std::span<const double> counts) {
    HarmonicChoice choice{model::Harmonic::linear, fit_fringe(phases, counts, model::Harmonic::linear),
                          fit_fringe(phases, counts, model::Harmonic::nonlinear)};
    const double r1 = choice.linear.residual_rms;
    const double r2 = choice.nonlinear.residual_rms;
    const double gain = std::max(choice.linear.chi2_flat - choice.linear.chi2,
                                 choice.nonlinear.chi2_flat - choice.nonlinear.chi2);
    if (std::abs(r1 - r2) <= 0.01 * std::max(r1, r2) || gain < kFringeSignificance)
        fail(ErrorKind::ambiguous_harmonic, "n=1 and n=2 fringes fit the data equally well");
    choice.harmonic = r2 < r1 ? model::Harmonic::nonlinear : model::Harmonic::linear;
    return choice;
}

double estimate_vpi(double probe_vpp, double phase_swing_rad) {
    if (!(probe_vpp > 0.0)) fail(ErrorKind::domain, "probe voltage must be > 0");
    if (!(phase_swing_rad > 0.0)) fail(ErrorKind::domain, "phase swing must be > 0");
    return model::kPi * probe_vpp / phase_swing_rad;
}

VpiEstimate estimate_vpi(double probe_vpp, Measured phase_swing_rad) {
    VpiEstimate e;
    e.vpi_v = estimate_vpi(probe_vpp, phase_swing_rad.value);
    e.sigma_v = e.vpi_v * phase_swing_rad.sigma / phase_swing_rad.value;
    e.small_signal = phase_swing_rad.value < 0.5;
    return e;
}

Measured fringe_phase_swing(const FringeFit& fit, Measured level_high, Measured level_low) {
    const double amp = fit.amplitude.value;
    const double vis = fit.visibility.value;
    if (!(amp > 0.0) || !(vis > 0.0)) fail(ErrorKind::domain, "fringe has no contrast to invert");
    const double order = model::order(fit.harmonic);

    // Total phase on [0, pi] and its derivative with respect to the level.
    const auto invert_level = [&](double level) {
        const double c = std::clamp((2.0 * level / amp - 1.0) / vis, -1.0, 1.0);
        const double s = std::sqrt(std::max(1.0 - c * c, 1e-300));
        return std::pair{std::acos(c), -2.0 / (amp * vis * s)};
    };
    const auto [theta_h, d_h] = invert_level(level_high.value);
    const auto [theta_l, d_l] = invert_level(level_low.value);
    Measured swing;
    swing.value = std::abs(theta_h - theta_l) / order;
    swing.sigma = std::hypot(d_h * level_high.sigma, d_l * level_low.sigma) / order;
    return swing;
}

LossBudget loss_budget(double v_singles, std::span<const std::pair<std::string, double>> losses_db) {
    LossBudget b;
    b.total_db = model::loss_from_singles_visibility(v_singles);
    double sum = 0.0;
    for (const auto& [name, loss] : losses_db) {
        b.components.emplace_back(name, -loss);
        sum -= loss;
    }
    b.residual_db = b.total_db - sum;
    return b;
}

double contrast(std::span<const double> counts) {
    if (counts.empty()) fail(ErrorKind::domain, "contrast of an empty series");
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    const double sum = *hi + *lo;
    return sum > 0.0 ? (*hi - *lo) / sum : 0.0;
}

} // namespace nli::analysis
