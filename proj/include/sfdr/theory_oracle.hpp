#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "sfdr/cdf_sampling.hpp"

namespace sfdr {

/// P-value mixture F(t) = pi0 * t + (1 - pi0) * G(t).
struct MixtureModel {
    double pi0 = 1.0;
    std::function<double(double)> alternative_cdf;
    /// G'(t), when known in closed form. Used for the Lipschitz constant.
    std::function<double(double)> alternative_density;
    /// Margin on which F(t) > t/alpha just below tau*. Unset means tau* itself,
    /// which holds for Gaussian alternatives.
    std::optional<double> delta_star;

    double pi1() const noexcept { return 1.0 - pi0; }
    double cdf(double t) const;
};

/// Two-sided p-values of N(mu, 1) statistics:
/// G(t) = Phi(z + mu) + Phi(z - mu) with z = Phi^{-1}(t/2).
MixtureModel gaussian_two_sided_mixture(double pi0, double mu);

/// Alternatives with p-value exactly 0: G(t) = 1 for every t >= 0.
MixtureModel separated_mixture(double pi0);

/// Largest root of F(t) = t/alpha in [0, alpha]. A scan of 10^4 cells from
/// alpha downward brackets the root, then bisection to 1e-12. Returns 0 when
/// no positive root exists.
double tau_star(const MixtureModel& model, double alpha);

struct AsymptoticReport {
    double tau_star = 0.0;
    bool degenerate = false;     // tau* = 0: no bracketing cell exists
    std::size_t j_star = 0;      // 0-based index of the grid point below tau*
    double grid_below = 0.0;     // t_{j*}
    double grid_above = 0.0;     // t_{j*+1}
    double tau_bar = 0.0;        // alpha * F(t_{j*})
    double lipschitz = 0.0;      // C* on (t_{j*}, t_{j*+1}); may be +inf
    double power_gap_bound = 0.0;
};

/// Limiting sample-and-forward threshold and power-gap bound for a grid.
///
/// Throws std::domain_error if tau* sits exactly on a grid point, lies
/// above the last grid point, or the grid is too coarse for the model's
/// margin (M <= (alpha/delta*) 1{tau* > 2 delta*} + 1).
AsymptoticReport limiting_threshold(const MixtureModel& model, double alpha, const SamplingScheme& scheme);

/// Numeric Lipschitz bound for G on (lo, hi): the largest finite-difference
/// slope over `cells` equal subintervals.
double slope_bound(const std::function<double(double)>& g, double lo, double hi, std::size_t cells = 1000);

}  // namespace sfdr
