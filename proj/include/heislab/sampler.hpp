#pragma once
// Metropolis sampling of finite-window Gibbs measures with quenched
// boundary.  Proposals add Gaussian noise in coordinates, with the vertical
// step scaled as scale^2 to match the anisotropy of the CC balls; the
// proposal is symmetric, so the acceptance rule uses the bare energy
// difference.  Everything is seeded and bitwise reproducible: the per-step
// draw order is fixed (three coordinate normals, then one uniform).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "heislab/lattice_quad.hpp"
#include "heislab/model.hpp"
#include "heislab/util.hpp"

namespace heislab {

enum class Schedule { sequential, checkerboard };
enum class EstimateMethod { mcmc, quadrature };

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    EstimateMethod method = EstimateMethod::mcmc;
};

// one Markov chain over a window; boundary spins are frozen data
class Chain {
  public:
    Chain(const LatticeConfig& cfg, const ModelSpec& m, std::uint64_t seed,
          double proposal_scale = 1.0)
        : cfg_(cfg), m_(m), rng_(seed), scale_(proposal_scale) {
        if (cfg_.size() <= 0) throw std::invalid_argument("Chain: empty window");
        if (m_.has_bonds() && (!cfg_.left_boundary || !cfg_.right_boundary)) {
            throw std::invalid_argument("Chain: boundary spins required");
        }
        d_.resize(static_cast<std::size_t>(cfg_.size()));
        for (int i = cfg_.lo; i <= cfg_.hi; ++i) {
            d_[static_cast<std::size_t>(i - cfg_.lo)] = cc_distance(cfg_.site(i));
        }
        if (m_.has_bonds()) {
            d_left_ = cc_distance(cfg_.site(cfg_.lo - 1));
            d_right_ = cc_distance(cfg_.site(cfg_.hi + 1));
        }
    }

    const LatticeConfig& config() const { return cfg_; }
    const ModelSpec& spec() const { return m_; }
    std::uint64_t steps() const { return steps_; }
    double scale() const { return scale_; }
    void set_scale(double s) { scale_ = s; }

    double site_distance(int i) const { return d_.at(static_cast<std::size_t>(i - cfg_.lo)); }

    double acceptance_rate() const {
        return proposed_ == 0 ? 0.0
                              : static_cast<double>(accepted_) / static_cast<double>(proposed_);
    }
    void reset_acceptance() { proposed_ = accepted_ = 0; }

    // one Metropolis proposal at window site i
    void site_update(int i) {
        const std::size_t k = static_cast<std::size_t>(i - cfg_.lo);
        const GroupElement& x = cfg_.spins.at(k);
        const double n1 = rng_.normal(), n2 = rng_.normal(), n3 = rng_.normal();
        const double u = rng_.uniform();
        const GroupElement y{x.x1 + scale_ * n1, x.x2 + scale_ * n2,
                             x.x3 + scale_ * scale_ * n3};
        const double dy = cc_distance(y);
        const SiteContext ctx = context_of(i);
        const double delta =
            conditional_energy(m_, dy, ctx) - conditional_energy(m_, d_[k], ctx);
        ++proposed_;
        ++steps_;
        if (delta <= 0.0 || u < std::exp(-delta)) {
            cfg_.spins[k] = y;
            d_[k] = dy;
            ++accepted_;
        }
    }

    void sweep(Schedule schedule) {
        if (schedule == Schedule::sequential) {
            for (int i = cfg_.lo; i <= cfg_.hi; ++i) site_update(i);
            return;
        }
        // even color first, then odd, matching the block decomposition of
        // the integers into even and odd sites
        for (int parity = 0; parity < 2; ++parity) {
            for (int i = cfg_.lo; i <= cfg_.hi; ++i) {
                if (((i % 2) + 2) % 2 == parity) site_update(i);
            }
        }
    }

  private:
    SiteContext context_of(int i) const {
        SiteContext ctx;
        if (!m_.has_bonds()) return ctx;
        ctx.neighbor_d.push_back(i - 1 < cfg_.lo ? d_left_
                                                 : d_[static_cast<std::size_t>(i - 1 - cfg_.lo)]);
        ctx.neighbor_d.push_back(i + 1 > cfg_.hi ? d_right_
                                                 : d_[static_cast<std::size_t>(i + 1 - cfg_.lo)]);
        return ctx;
    }

    LatticeConfig cfg_;
    ModelSpec m_;
    Rng rng_;
    double scale_;
    std::vector<double> d_;
    double d_left_ = 0.0, d_right_ = 0.0;
    std::uint64_t steps_ = 0, proposed_ = 0, accepted_ = 0;
};

// multiplicative scale adjustment until the acceptance rate sits in
// [lo, hi]; burn-in work, part of the seeded trajectory
inline double tune_proposal_scale(Chain& chain, Schedule schedule, double lo = 0.2,
                                  double hi = 0.5, int rounds = 40,
                                  int sweeps_per_round = 20) {
    for (int r = 0; r < rounds; ++r) {
        chain.reset_acceptance();
        for (int s = 0; s < sweeps_per_round; ++s) chain.sweep(schedule);
        const double a = chain.acceptance_rate();
        if (a > hi) chain.set_scale(chain.scale() * 1.4);
        else if (a < lo) chain.set_scale(chain.scale() / 1.4);
        else break;
    }
    return chain.scale();
}

// integrated autocorrelation time by the initial-positive-sequence rule
inline double integrated_autocorrelation_time(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 8) return 1.0;
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double x : series) c0 += (x - mean) * (x - mean);
    c0 /= static_cast<double>(n);
    if (!(c0 > 0.0)) return 1.0;
    double tau = 1.0;
    for (std::size_t lag = 1; lag < n / 2; ++lag) {
        double c = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            c += (series[t] - mean) * (series[t + lag] - mean);
        }
        c /= static_cast<double>(n - lag) * c0;
        if (c <= 0.0) break;
        tau += 2.0 * c;
    }
    return tau;
}

struct SamplerOptions {
    std::size_t n_sweeps = 100000;
    std::size_t burn_in = 0;  // 0 = pilot run, 10x the autocorrelation time of d
    int n_chains = 1;
    Schedule schedule = Schedule::sequential;
    double proposal_scale = 1.0;
    bool auto_tune = true;
    int n_batches = 50;
    int threads = 1;
};

namespace detail {

inline std::size_t auto_burn_in(Chain& chain, Schedule schedule) {
    const int mid = chain.config().lo + chain.config().size() / 2;
    std::vector<double> pilot;
    pilot.reserve(1000);
    for (int s = 0; s < 1000; ++s) {
        chain.sweep(schedule);
        pilot.push_back(chain.site_distance(mid));
    }
    const double tau = integrated_autocorrelation_time(pilot);
    return std::max<std::size_t>(200, static_cast<std::size_t>(std::ceil(10.0 * tau)));
}

// batch means of one chain's sample series
inline std::vector<double> batch_means(const std::vector<double>& samples, int n_batches) {
    const std::size_t b = samples.size() / static_cast<std::size_t>(n_batches);
    if (b == 0) throw std::invalid_argument("too few samples for the batch count");
    std::vector<double> means(static_cast<std::size_t>(n_batches), 0.0);
    for (int k = 0; k < n_batches; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t < b; ++t) s += samples[static_cast<std::size_t>(k) * b + t];
        means[static_cast<std::size_t>(k)] = s / static_cast<double>(b);
    }
    return means;
}

} // namespace detail

// runs one chain and returns per-sweep observable samples; infinities are
// rejected unless the caller treats them as data (exponential moments do)
inline std::vector<double> run_chain_samples(const LatticeConfig& cfg, const ModelSpec& m,
                                             const std::function<double(const LatticeConfig&)>& f,
                                             const SamplerOptions& opt, std::uint64_t chain_seed,
                                             bool allow_nonfinite = false) {
    Chain chain(cfg, m, chain_seed, opt.proposal_scale);
    if (opt.auto_tune) tune_proposal_scale(chain, opt.schedule);
    const std::size_t burn =
        opt.burn_in > 0 ? opt.burn_in : detail::auto_burn_in(chain, opt.schedule);
    for (std::size_t s = 0; s < burn; ++s) chain.sweep(opt.schedule);
    std::vector<double> samples;
    samples.reserve(opt.n_sweeps);
    for (std::size_t s = 0; s < opt.n_sweeps; ++s) {
        chain.sweep(opt.schedule);
        const double v = f(chain.config());
        if (!allow_nonfinite && !std::isfinite(v)) {
            throw std::runtime_error("non-finite observable at sweep " + std::to_string(s));
        }
        samples.push_back(v);
    }
    return samples;
}

// E^{window, omega}[f] by Metropolis MC with batch-means error bars; chains
// run independently on derived seeds and merge in fixed order
inline Estimate estimate_expectation(const ModelSpec& m, const LatticeConfig& cfg,
                                     const std::function<double(const LatticeConfig&)>& f,
                                     const SamplerOptions& opt, std::uint64_t seed) {
    if (opt.n_chains < 1) throw std::invalid_argument("need at least one chain");
    std::vector<std::vector<double>> per_chain(static_cast<std::size_t>(opt.n_chains));
    parallel_for(static_cast<std::size_t>(opt.n_chains), opt.threads, [&](std::size_t c) {
        per_chain[c] = detail::batch_means(
            run_chain_samples(cfg, m, f, opt, derive_seed(seed, c)), opt.n_batches);
    });
    std::vector<double> all;
    for (const auto& v : per_chain) all.insert(all.end(), v.begin(), v.end());
    double mean = 0.0;
    for (double x : all) mean += x;
    mean /= static_cast<double>(all.size());
    double var = 0.0;
    for (double x : all) var += (x - mean) * (x - mean);
    var /= static_cast<double>(all.size() - 1);
    Estimate est;
    est.value = mean;
    est.stderr_ = std::sqrt(var / static_cast<double>(all.size()));
    est.n_samples = opt.n_sweeps * static_cast<std::size_t>(opt.n_chains);
    est.seed = seed;
    est.method = EstimateMethod::mcmc;
    return est;
}

// ---- exponential moments ---------------------------------------------------

struct ExpMomentReport {
    Estimate est;
    bool tail_warning = false;  // top 0.1% of samples carries > 50% of the sum
    bool overflow = false;      // exp overflowed; evidence of divergence
    double top_fraction = 0.0;
};

// E[e^{eps g}] with a heavy-tail diagnostic: a finite MC average is
// meaningless when a vanishing fraction of samples dominates it, which is
// exactly how a divergent exponential moment shows up at finite n.
inline ExpMomentReport exp_moment_estimate(const ModelSpec& m, const LatticeConfig& cfg,
                                           const std::function<double(const LatticeConfig&)>& g,
                                           double eps, const SamplerOptions& opt,
                                           std::uint64_t seed) {
    if (!(eps > 0.0)) throw std::invalid_argument("exp_moment_estimate: eps must be positive");
    ExpMomentReport rep;
    std::vector<std::vector<double>> per_chain(static_cast<std::size_t>(opt.n_chains));
    parallel_for(static_cast<std::size_t>(opt.n_chains), opt.threads, [&](std::size_t c) {
        per_chain[c] = run_chain_samples(
            cfg, m,
            [&](const LatticeConfig& state) {
                const double e = eps * g(state);
                return e > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(e);
            },
            opt, derive_seed(seed, c), /*allow_nonfinite=*/true);
    });
    std::vector<double> all;
    for (const auto& v : per_chain) all.insert(all.end(), v.begin(), v.end());
    double total = 0.0;
    for (double w : all) {
        if (!std::isfinite(w)) rep.overflow = true;
        total += w;
    }
    rep.est.n_samples = all.size();
    rep.est.seed = seed;
    rep.est.method = EstimateMethod::mcmc;
    if (rep.overflow) {
        rep.est.value = std::numeric_limits<double>::infinity();
        rep.est.stderr_ = std::numeric_limits<double>::infinity();
        rep.tail_warning = true;
        rep.top_fraction = 1.0;
        return rep;
    }
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t top = std::max<std::size_t>(1, sorted.size() / 1000);
    double top_sum = 0.0;
    for (std::size_t i = 0; i < top; ++i) top_sum += sorted[i];
    rep.top_fraction = total > 0.0 ? top_sum / total : 0.0;
    rep.tail_warning = rep.top_fraction > 0.5;
    std::vector<double> bm;
    {
        // batch means over the concatenated chains, chain by chain
        for (auto& v : per_chain) {
            auto b = detail::batch_means(v, opt.n_batches);
            bm.insert(bm.end(), b.begin(), b.end());
        }
    }
    double mean = 0.0;
    for (double x : bm) mean += x;
    mean /= static_cast<double>(bm.size());
    double var = 0.0;
    for (double x : bm) var += (x - mean) * (x - mean);
    var /= static_cast<double>(bm.size() - 1);
    rep.est.value = mean;
    rep.est.stderr_ = std::sqrt(var / static_cast<double>(bm.size()));
    return rep;
}

} // namespace heislab
