#include "gcb/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gcb/rng.hpp"

namespace gcb {

namespace {

constexpr int kResamples = 200;
constexpr uint64_t kBootstrapSalt = 0xB0075742u;

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double se_of_mean(std::span<const double> v) {
    return v.empty() ? 0.0 : sd_of(v) / std::sqrt(static_cast<double>(v.size()));
}

/// Path bootstrap: resamples the rows of one or two columns and evaluates
/// the statistic on the resampled means. Resample indices are a fixed
/// deterministic function of the ensemble seed.
template <typename Stat>
double bootstrap_se(uint64_t ens_seed, std::span<const double> col_a,
                    std::span<const double> col_b, Stat&& stat) {
    const std::size_t n = col_a.size();
    if (n < 2) {
        return 0.0;
    }
    NormalStream stream(splitmix64(ens_seed ^ kBootstrapSalt), 0);
    std::vector<double> stats(kResamples);
    for (int r = 0; r < kResamples; ++r) {
        double sum_a = 0.0, sum_b = 0.0;
        const uint64_t base = static_cast<uint64_t>(r) * n;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = static_cast<std::size_t>(
                stream.uniform_index(kChannelBootstrap, base + k, n));
            sum_a += col_a[idx];
            if (!col_b.empty()) {
                sum_b += col_b[idx];
            }
        }
        stats[static_cast<std::size_t>(r)] =
            stat(sum_a / static_cast<double>(n), sum_b / static_cast<double>(n));
    }
    return sd_of(stats);
}

struct LogMgfParts {
    std::vector<double> vals;
    std::vector<double> w;  // exp(vals - shift)
    double shift = 0.0;
    double value = 0.0;
};

LogMgfParts log_mgf_parts(const Ensemble& ens, const Observable& f) {
    LogMgfParts parts;
    const long n = ens.n_paths;
    parts.vals.resize(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        parts.vals[static_cast<std::size_t>(i)] = f.eval(ens.state(i));
    }
    parts.shift = *std::max_element(parts.vals.begin(), parts.vals.end());
    parts.w.resize(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        parts.w[static_cast<std::size_t>(i)] =
            std::exp(parts.vals[static_cast<std::size_t>(i)] - parts.shift);
    }
    const double mean_w = mean_of(parts.w);
    const double fbar = mean_of(parts.vals);
    // Grouping (shift - fbar) keeps the statistic exactly shift-invariant.
    parts.value = std::log(mean_w) + (parts.shift - fbar);
    return parts;
}

double squared_distance(StateView x, StateView y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

}  // namespace

Estimate empirical_log_mgf(const Ensemble& ens, const Observable& f) {
    if (ens.n_paths < 2) {
        throw std::invalid_argument("empirical_log_mgf: need at least 2 samples");
    }
    const auto parts = log_mgf_parts(ens, f);
    Estimate est;
    est.value = parts.value;
    est.n = ens.n_paths;
    est.valid = std::isfinite(parts.value);
    const double shift = parts.shift;
    est.std_error =
        bootstrap_se(ens.seed, parts.w, parts.vals,
                     [shift](double mean_w, double mean_f) {
                         return std::log(mean_w) + (shift - mean_f);
                     });
    return est;
}

GcbEstimate empirical_gcb_constant(const Ensemble& ens,
                                   const TestFamily& family) {
    if (family.members.empty()) {
        throw std::invalid_argument("empirical_gcb_constant: empty family");
    }
    if (ens.n_paths < 2) {
        throw std::invalid_argument("empirical_gcb_constant: need >= 2 samples");
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t k = 0; k < family.members.size(); ++k) {
        const auto& member = family.members[k];
        if (!(member.lip > 0.0)) {
            throw std::invalid_argument(
                "empirical_gcb_constant: member with nonpositive lip");
        }
        const auto parts = log_mgf_parts(ens, member);
        const double stat = parts.value / (member.lip * member.lip);
        if (stat > best) {
            best = stat;
            best_idx = k;
        }
    }
    const auto& winner = family.members[best_idx];
    const auto parts = log_mgf_parts(ens, winner);
    const double lip_sq = winner.lip * winner.lip;
    const double shift = parts.shift;

    GcbEstimate out;
    out.est.value = best;
    out.est.n = ens.n_paths;
    out.est.valid = std::isfinite(best);
    out.est.std_error =
        bootstrap_se(ens.seed, parts.w, parts.vals,
                     [shift, lip_sq](double mean_w, double mean_f) {
                         return (std::log(mean_w) + (shift - mean_f)) / lip_sq;
                     });
    out.argmax_member = winner.family;
    out.argmax_index = best_idx;
    return out;
}

Estimate exp_square_moment(const Ensemble& ens, double a, StateView x0) {
    if (!(a > 0.0)) {
        throw std::invalid_argument("exp_square_moment: a must be positive");
    }
    if (static_cast<int>(x0.size()) != ens.dim) {
        throw std::invalid_argument("exp_square_moment: x0 dimension mismatch");
    }
    const long n = ens.n_paths;
    std::vector<double> expo(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        expo[static_cast<std::size_t>(i)] = a * squared_distance(ens.state(i), x0);
    }
    const double shift = expo.empty()
                             ? 0.0
                             : *std::max_element(expo.begin(), expo.end());
    std::vector<double> w(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] =
            std::exp(expo[static_cast<std::size_t>(i)] - shift);
    }
    Estimate est;
    est.n = n;
    est.valid = shift <= 700.0;
    est.value = std::exp(std::log(mean_of(w)) + shift);
    est.std_error = bootstrap_se(ens.seed, w, {}, [shift](double mean_w, double) {
        return std::exp(std::log(mean_w) + shift);
    });
    return est;
}

Estimate tail_probability(const Ensemble& ens, StateView x0, double r) {
    if (r < 0.0) {
        throw std::invalid_argument("tail_probability: r must be >= 0");
    }
    const long n = ens.n_paths;
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        dist[static_cast<std::size_t>(i)] =
            std::sqrt(squared_distance(ens.state(i), x0));
    }
    const double mu = mean_of(dist);
    long count = 0;
    for (double d : dist) {
        count += d > mu + r ? 1 : 0;
    }
    Estimate est;
    est.n = n;
    const double p = n > 0 ? static_cast<double>(count) / static_cast<double>(n) : 0.0;
    est.value = p;
    est.std_error = n > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0;
    return est;
}

ChernoffReport chernoff_check(const Ensemble& ens, StateView x0, double d_const,
                              std::span<const double> r_grid) {
    if (!(d_const > 0.0)) {
        throw std::invalid_argument("chernoff_check: D must be positive");
    }
    const long n = ens.n_paths;
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        dist[static_cast<std::size_t>(i)] =
            std::sqrt(squared_distance(ens.state(i), x0));
    }
    std::sort(dist.begin(), dist.end());
    double mu = mean_of(dist);

    ChernoffReport report;
    report.mu_d = mu;
    for (double r : r_grid) {
        const double threshold = mu + r;
        const auto it = std::upper_bound(dist.begin(), dist.end(), threshold);
        const long count = static_cast<long>(dist.end() - it);
        const double p = static_cast<double>(count) / static_cast<double>(n);
        ChernoffRow row;
        row.r = r;
        row.empirical = p;
        row.se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        row.bound = std::exp(-r * r / (4.0 * d_const));
        row.violation = p - 3.0 * row.se > row.bound;
        report.passed = report.passed && !row.violation;
        report.rows.push_back(row);
    }
    return report;
}

CouplingRateEstimate coupling_rate_estimate(const CoupledEnsemble& cpl) {
    const double denom = std::sqrt(squared_distance(
        {cpl.x0.data(), cpl.x0.size()}, {cpl.y0.data(), cpl.y0.size()}));
    if (!(denom > 0.0)) {
        throw std::invalid_argument("coupling_rate_estimate: x and y coincide");
    }
    const long n = cpl.n_paths;
    std::vector<double> ratio(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        ratio[static_cast<std::size_t>(i)] =
            std::sqrt(squared_distance(cpl.x_state(i), cpl.y_state(i))) / denom;
    }
    CouplingRateEstimate out;
    out.mean.value = mean_of(ratio);
    out.mean.std_error = se_of_mean(ratio);
    out.mean.n = n;
    out.max_ratio = ratio.empty() ? 0.0 : *std::max_element(ratio.begin(), ratio.end());
    return out;
}

SemigroupEstimate nonlinear_semigroup_estimate(
    const ProcessSpec& spec, const Observable& f,
    const std::vector<std::vector<double>>& x_grid, double t, double dt,
    long n_paths, uint64_t seed, int n_workers) {
    if (x_grid.size() < 2) {
        throw std::invalid_argument(
            "nonlinear_semigroup_estimate: need at least 2 start points");
    }
    SemigroupEstimate out;
    for (const auto& start : x_grid) {
        if (static_cast<int>(start.size()) != spec.dim) {
            throw std::invalid_argument(
                "nonlinear_semigroup_estimate: start dimension mismatch");
        }
        if (t == 0.0) {
            out.v_hat.push_back(f.eval({start.data(), start.size()}));
            out.se.push_back(0.0);
            continue;
        }
        const auto grid = TimeGrid::make(0.0, t, dt);
        const double cps[1] = {t};
        // Same seed for every start: common random numbers.
        const auto set = simulate_ensemble(spec, InitialLaw::point(start), grid,
                                           n_paths, seed, cps, n_workers);
        const auto& ens = set.checkpoints.front();
        std::vector<double> vals(static_cast<std::size_t>(ens.n_paths));
        for (long i = 0; i < ens.n_paths; ++i) {
            vals[static_cast<std::size_t>(i)] = f.eval(ens.state(i));
        }
        const double shift = *std::max_element(vals.begin(), vals.end());
        std::vector<double> w(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) {
            w[i] = std::exp(vals[i] - shift);
        }
        out.v_hat.push_back(std::log(mean_of(w)) + shift);
        out.se.push_back(bootstrap_se(seed, w, {}, [](double mean_w, double) {
            return std::log(mean_w);
        }));
    }

    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        for (std::size_t j = i + 1; j < x_grid.size(); ++j) {
            const double dist = std::sqrt(squared_distance(
                {x_grid[i].data(), x_grid[i].size()},
                {x_grid[j].data(), x_grid[j].size()}));
            if (dist > 0.0) {
                out.max_ratio = std::max(
                    out.max_ratio, std::abs(out.v_hat[i] - out.v_hat[j]) / dist);
            }
        }
    }
    if (spec.constants.gamma_rate) {
        out.lip_bound = f.lip * spec.constants.gamma_rate(t);
    }
    return out;
}

std::vector<MomentRow> odd_moment_check(std::span<const double> z,
                                        std::span<const int> orders) {
    if (z.size() < 100) {
        throw std::invalid_argument("odd_moment_check: need at least 100 samples");
    }
    std::vector<MomentRow> rows;
    std::vector<double> powered(z.size());
    for (int order : orders) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            powered[i] = std::pow(z[i], order);
        }
        MomentRow row;
        row.order = order;
        row.moment = mean_of(powered);
        row.se = se_of_mean(powered);
        row.pass = std::abs(row.moment) <= 3.0 * row.se;
        rows.push_back(row);
    }
    return rows;
}

BurkholderReport burkholder_moment_check(std::span<const double> z,
                                         std::span<const double> qv, int n,
                                         double a_const) {
    if (z.size() != qv.size() || z.empty()) {
        throw std::invalid_argument(
            "burkholder_moment_check: need paired, nonempty samples");
    }
    if (n < 1) {
        throw std::invalid_argument("burkholder_moment_check: order must be >= 1");
    }
    // n = 1 with A = 1 is the isometry: equality, no (2n)^n inflation.
    const bool isometry = n == 1 && a_const == 1.0;
    const double factor = isometry ? 1.0 : a_const * std::pow(2.0 * n, n);
    std::vector<double> lhs(z.size()), rhs(z.size()), diff(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        lhs[i] = std::pow(z[i], 2 * n);
        rhs[i] = factor * std::pow(qv[i], n);
        diff[i] = rhs[i] - lhs[i];
    }
    BurkholderReport report;
    report.order = n;
    report.lhs = mean_of(lhs);
    report.lhs_se = se_of_mean(lhs);
    report.rhs = mean_of(rhs);
    report.rhs_se = se_of_mean(rhs);
    const double diff_mean = mean_of(diff);
    const double diff_se = se_of_mean(diff);
    if (isometry) {
        report.pass = std::abs(diff_mean) <= 3.0 * diff_se;
    } else {
        report.pass = diff_mean >= -3.0 * diff_se;
    }
    return report;
}

StabilityReport exp_square_stability(const Ensemble& ens, double a,
                                     StateView x0) {
    StabilityReport report;
    report.full = exp_square_moment(ens, a, x0);

    Ensemble half = ens;
    half.n_paths = ens.n_paths / 2;
    half.data.assign(ens.data.begin(),
                     ens.data.begin() +
                         static_cast<std::ptrdiff_t>(half.n_paths) * ens.dim);
    report.half = exp_square_moment(half, a, x0);

    if (!report.full.valid || !report.half.valid ||
        !std::isfinite(report.full.value) || !std::isfinite(report.half.value)) {
        report.stable = false;
        return report;
    }
    const double diff = std::abs(report.full.value - report.half.value);
    const double rel = diff / std::max(std::abs(report.full.value), 1e-300);
    // Pure relative rule: bootstrap errors of max-dominated means are
    // themselves unstable, so they cannot serve as the yardstick here.
    report.stable = rel <= 0.05;
    return report;
}

}  // namespace gcb
