#include "sfdr/theory_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace sfdr {

double MixtureModel::cdf(double t) const {
    return pi0 * t + pi1() * alternative_cdf(t);
}

MixtureModel gaussian_two_sided_mixture(double pi0, double mu) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw std::domain_error("mixture: pi0 must lie in (0,1)");
    MixtureModel model;
    model.pi0 = pi0;
    model.alternative_cdf = [mu](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const boost::math::normal standard;
        const double z = boost::math::quantile(standard, t / 2.0);
        return boost::math::cdf(standard, z + mu) + boost::math::cdf(standard, z - mu);
    };
    // (phi(z+mu) + phi(z-mu)) / (2 phi(z)) = exp(-mu^2/2) cosh(mu z)
    model.alternative_density = [mu](double t) {
        if (t <= 0.0) return std::numeric_limits<double>::infinity();
        if (t >= 1.0) return std::exp(-mu * mu / 2.0);
        const double z = boost::math::quantile(boost::math::normal(), t / 2.0);
        return std::exp(-mu * mu / 2.0) * std::cosh(mu * z);
    };
    return model;
}

MixtureModel separated_mixture(double pi0) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw std::domain_error("mixture: pi0 must lie in (0,1)");
    MixtureModel model;
    model.pi0 = pi0;
    model.alternative_cdf = [](double t) { return t >= 0.0 ? 1.0 : 0.0; };
    model.alternative_density = [](double) { return 0.0; };
    return model;
}

double tau_star(const MixtureModel& model, double alpha) {
    check_alpha(alpha);
    constexpr std::size_t cells = 10000;
    const auto excess = [&](double t) { return model.cdf(t) - t / alpha; };
    const auto grid = [&](std::size_t k) { return k == cells ? alpha : alpha * static_cast<double>(k) / cells; };

    for (std::size_t k = cells; k >= 1; --k) {
        if (excess(grid(k)) < 0.0) continue;
        if (k == cells) return alpha;
        double lo = grid(k);
        double hi = grid(k + 1);
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) >= 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    return 0.0;
}

double slope_bound(const std::function<double(double)>& g, double lo, double hi, std::size_t cells) {
    double best = 0.0;
    const double width = (hi - lo) / static_cast<double>(cells);
    double prev = g(lo);
    for (std::size_t k = 1; k <= cells; ++k) {
        const double x = lo + width * static_cast<double>(k);
        const double cur = g(x);
        best = std::max(best, std::fabs(cur - prev) / width);
        prev = cur;
    }
    return best;
}

AsymptoticReport limiting_threshold(const MixtureModel& model, double alpha, const SamplingScheme& scheme) {
    AsymptoticReport report;
    report.tau_star = tau_star(model, alpha);
    if (report.tau_star <= 0.0) {
        report.degenerate = true;
        return report;
    }

    const auto grid = scheme.locations();
    const auto above = std::upper_bound(grid.begin(), grid.end(), report.tau_star);
    if (above != grid.begin() && *(above - 1) == report.tau_star) {
        throw std::domain_error("limiting_threshold: tau* lies exactly on a sampling point");
    }
    if (above == grid.begin() || above == grid.end()) {
        throw std::domain_error("limiting_threshold: tau* is not bracketed by the sampling grid");
    }

    const double delta = model.delta_star.value_or(report.tau_star);
    const double samples = static_cast<double>(scheme.sample_count());
    const double required = (report.tau_star > 2.0 * delta ? alpha / delta : 0.0) + 1.0;
    if (!(samples > required)) {
        throw std::domain_error("limiting_threshold: too few samples for the model's margin");
    }

    report.j_star = static_cast<std::size_t>(above - grid.begin()) - 1;
    report.grid_below = grid[report.j_star];
    report.grid_above = *above;
    report.tau_bar = alpha * model.cdf(report.grid_below);

    if (model.alternative_density) {
        // G is concave for the families provided, so the density peaks at the left end.
        report.lipschitz = std::max(model.alternative_density(report.grid_below),
                                    model.alternative_density(report.grid_above));
    } else {
        report.lipschitz = slope_bound(model.alternative_cdf, report.grid_below, report.grid_above);
    }
    const double spacing = scheme.kind() == SchemeKind::InclusiveGrid ? alpha / (samples - 1.0)
                                                                       : report.grid_above - report.grid_below;
    report.power_gap_bound = report.lipschitz * spacing;
    return report;
}

}  // namespace sfdr
