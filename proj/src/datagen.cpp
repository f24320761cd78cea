#include "sfdr/datagen.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>

#include "sfdr/multihop_qute.hpp"

namespace sfdr {

void ExperimentConfig::validate() const {
    if (N < 1) throw std::domain_error("config: N must be at least 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::domain_error("config: lambda must be >= 0");
    check_alpha(alpha);
    if (M < 2) throw std::domain_error("config: M must be at least 2");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("config: rho must lie in [0,1)");
    if (trials < 1) throw std::domain_error("config: trials must be at least 1");
    if (scheme != "inclusive" && scheme != "interior") {
        throw std::domain_error("config: scheme must be inclusive or interior, got " + scheme);
    }
    TopologySpec::parse(topology);
    if (hops < 1) throw std::domain_error("config: hops must be at least 1");
}

double ExperimentConfig::pi1(std::size_t i) const {
    return 0.5 - 0.4 * static_cast<double>(i) / static_cast<double>(N);
}

double ExperimentConfig::mu_base(std::size_t i) const {
    return 2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(N);
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::domain_error("config: cannot parse " + std::string(key) + " = '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view raw) {
    const std::string value = trim(raw);
    if (key == "N") {
        c.N = parse_number<std::size_t>(key, value);
    } else if (key == "lambda") {
        c.lambda = parse_number<double>(key, value);
    } else if (key == "alpha") {
        c.alpha = parse_number<double>(key, value);
    } else if (key == "M") {
        c.M = parse_number<int>(key, value);
    } else if (key == "rho") {
        c.rho = parse_number<double>(key, value);
    } else if (key == "trials") {
        c.trials = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
        c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "scheme") {
        c.scheme = value;
    } else if (key == "grid_span") {
        if (value == "alpha") c.grid_span = GridSpan::Alpha;
        else if (value == "unit") c.grid_span = GridSpan::Unit;
        else throw std::domain_error("config: grid_span must be alpha or unit");
    } else if (key == "mu_draw") {
        if (value == "per_statistic") c.mu_draw = MuDraw::PerStatistic;
        else if (value == "per_node") c.mu_draw = MuDraw::PerNode;
        else throw std::domain_error("config: mu_draw must be per_statistic or per_node");
    } else if (key == "dependence_scope") {
        if (value == "global") c.dependence_scope = DependenceScope::Global;
        else if (value == "per_node") c.dependence_scope = DependenceScope::PerNode;
        else throw std::domain_error("config: dependence_scope must be global or per_node");
    } else if (key == "topology") {
        c.topology = value;
    } else if (key == "hops") {
        c.hops = parse_number<int>(key, value);
    } else {
        throw std::domain_error("config: unknown key '" + std::string(key) + "'");
    }
}

ExperimentConfig read_config(std::istream& in, ExperimentConfig base) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::domain_error("config: line " + std::to_string(line_no) + " is not key = value");
        }
        apply_setting(base, trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    }
    return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw std::domain_error("config: cannot open " + path);
    return read_config(in, std::move(base));
}

double two_sided_p(double statistic) {
    return std::erfc(std::fabs(statistic) / std::sqrt(2.0));
}

std::vector<double> ar1_noise(std::size_t n, double rho, Rng& rng) {
    if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("ar1_noise: rho must lie in [0,1)");
    const double innovation = std::sqrt(1.0 - rho * rho);
    std::vector<double> e;
    e.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double z = rng.normal();
        e.push_back(k == 0 ? z : rho * e.back() + innovation * z);
    }
    return e;
}

namespace {

TrialData generate(const ExperimentConfig& config, std::uint64_t trial_index, double rho) {
    config.validate();
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(config.seed, Stream::TrialData, trial_index, attempt);

        // Labels and mean shifts first, node by node; noise afterwards in the
        // global order so the AR(1) chain can cross node boundaries.
        std::vector<std::size_t> sizes(config.N);
        std::vector<std::vector<bool>> nulls(config.N);
        std::vector<std::vector<double>> shifts(config.N);
        for (std::size_t i = 1; i <= config.N; ++i) {
            const std::size_t m_i = rng.poisson(config.lambda);
            const double pi1 = config.pi1(i);
            const double centre = config.mu_base(i);
            const double node_mu =
                config.mu_draw == MuDraw::PerNode ? rng.uniform(centre - 0.5, centre + 0.5) : 0.0;
            sizes[i - 1] = m_i;
            for (std::size_t j = 0; j < m_i; ++j) {
                const bool alternative = rng.bernoulli(pi1);
                double shift = 0.0;
                if (alternative) {
                    shift = config.mu_draw == MuDraw::PerStatistic ? rng.uniform(centre - 0.5, centre + 0.5)
                                                                   : node_mu;
                }
                nulls[i - 1].push_back(!alternative);
                shifts[i - 1].push_back(shift);
            }
        }

        std::size_t total = 0;
        for (std::size_t m_i : sizes) total += m_i;
        std::vector<double> noise;
        noise.reserve(total);
        if (config.dependence_scope == DependenceScope::Global) {
            noise = ar1_noise(total, rho, rng);
        } else {
            for (std::size_t m_i : sizes) {
                const auto segment = ar1_noise(m_i, rho, rng);
                noise.insert(noise.end(), segment.begin(), segment.end());
            }
        }

        TrialData out;
        out.resamples = attempt;
        std::size_t k = 0;
        for (std::size_t i = 0; i < config.N; ++i) {
            std::vector<double> values;
            values.reserve(sizes[i]);
            for (std::size_t j = 0; j < sizes[i]; ++j) values.push_back(two_sided_p(noise[k++] + shifts[i][j]));
            out.total_m += sizes[i];
            PValueBatch batch(static_cast<int>(i), std::move(values), std::move(nulls[i]));
            out.total_m0 += batch.null_count();
            out.batches.push_back(std::move(batch));
        }
        out.total_m1 = out.total_m - out.total_m0;
        if (out.total_m > 0) return out;
    }
}

}  // namespace

TrialData generate_trial(const ExperimentConfig& config, std::uint64_t trial_index) {
    return generate(config, trial_index, 0.0);
}

TrialData generate_dependent_trial(const ExperimentConfig& config, std::uint64_t trial_index) {
    if (!(config.rho >= 0.0 && config.rho < 1.0)) {
        throw std::domain_error("generate_dependent_trial: rho must lie in [0,1)");
    }
    return generate(config, trial_index, config.rho);
}

PValueBatch generate_mixture_batch(double pi0, double mu, std::size_t m, Rng& rng, int node_id) {
    if (!(pi0 >= 0.0 && pi0 <= 1.0)) throw std::domain_error("mixture: pi0 outside [0,1]");
    std::vector<double> values;
    std::vector<bool> nulls;
    values.reserve(m);
    nulls.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        const bool is_null = rng.bernoulli(pi0);
        const double x = rng.normal() + (is_null ? 0.0 : mu);
        values.push_back(two_sided_p(x));
        nulls.push_back(is_null);
    }
    return PValueBatch(node_id, std::move(values), std::move(nulls));
}

}  // namespace sfdr
