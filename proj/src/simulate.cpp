#include "msboot/simulate.hpp"

#include "msboot/errors.hpp"
#include "msboot/kernels.hpp"
#include "msboot/pvalues.hpp"
#include "msboot/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace msboot {

namespace {

constexpr std::uint64_t kTrialPointStream = 0xFFFFFFFFULL;
constexpr std::size_t kChunk = 4096;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_point(const RegionSpec& region, std::span<const double> point, const char* who) {
    if (static_cast<int>(point.size()) != region.dim) {
        throw config_error(std::string(who) + ": point dimension " +
                           std::to_string(point.size()) + " != region dimension " +
                           std::to_string(region.dim));
    }
}

} // namespace

RegionSpec RegionSpec::half_space(int dim, double offset) {
    RegionSpec r;
    r.kind = RegionKind::half_space;
    r.dim = dim;
    r.offset = offset;
    r.validate();
    return r;
}

RegionSpec RegionSpec::ball(std::vector<double> center, double radius) {
    RegionSpec r;
    r.kind = RegionKind::ball;
    r.dim = static_cast<int>(center.size());
    r.center = std::move(center);
    r.radius = radius;
    r.validate();
    return r;
}

RegionSpec RegionSpec::cone(std::vector<std::vector<double>> normals, std::vector<double> offsets) {
    RegionSpec r;
    r.kind = RegionKind::cone;
    r.normals = std::move(normals);
    r.offsets = std::move(offsets);
    r.dim = r.normals.empty() ? 0 : static_cast<int>(r.normals.front().size());
    r.validate();
    return r;
}

void RegionSpec::validate() const {
    if (dim < 1) throw config_error("region: dimension must be >= 1");
    switch (kind) {
        case RegionKind::half_space:
            break;
        case RegionKind::ball:
            if (static_cast<int>(center.size()) != dim) throw config_error("ball: center/dim mismatch");
            if (!(radius > 0.0)) throw config_error("ball: radius must be > 0");
            break;
        case RegionKind::cone: {
            if (normals.empty()) throw config_error("cone: needs at least one half space");
            if (normals.size() != offsets.size()) throw config_error("cone: normals/offsets mismatch");
            for (const auto& n : normals) {
                if (static_cast<int>(n.size()) != dim) throw config_error("cone: normal/dim mismatch");
                const double len = std::sqrt(dot(n, n));
                if (std::fabs(len - 1.0) > 1e-9) throw config_error("cone: normals must be unit length");
            }
            break;
        }
    }
}

bool membership(const RegionSpec& region, std::span<const double> point) {
    check_point(region, point, "membership");
    switch (region.kind) {
        case RegionKind::half_space:
            return point[point.size() - 1] <= -region.offset;
        case RegionKind::ball: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < point.size(); ++i) {
                const double diff = point[i] - region.center[i];
                d2 += diff * diff;
            }
            return d2 <= region.radius * region.radius;
        }
        case RegionKind::cone:
            for (std::size_t k = 0; k < region.normals.size(); ++k) {
                if (dot(region.normals[k], point) > region.offsets[k]) return false;
            }
            return true;
    }
    return false;
}

Geometry analytic_geometry(const RegionSpec& region, std::span<const double> y) {
    check_point(region, y, "analytic_geometry");
    Geometry g;
    switch (region.kind) {
        case RegionKind::half_space:
            g.beta0 = y[y.size() - 1] + region.offset;
            g.beta1 = 0.0;
            return g;
        case RegionKind::ball: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double diff = y[i] - region.center[i];
                d2 += diff * diff;
            }
            const double d = std::sqrt(d2);
            if (d < 1e-12) throw numeric_error("analytic_geometry: projection from the ball center is ambiguous");
            g.beta0 = d - region.radius;
            g.beta1 = static_cast<double>(region.dim - 1) / (2.0 * region.radius);
            return g;
        }
        case RegionKind::cone: {
            const std::size_t nf = region.normals.size();
            std::vector<double> slack(nf); // positive = violated
            std::size_t violated = 0;
            for (std::size_t k = 0; k < nf; ++k) {
                slack[k] = dot(region.normals[k], y) - region.offsets[k];
                if (slack[k] > 0.0) ++violated;
            }
            // Candidate facets: violated ones when outside, all when inside.
            // A candidate is usable if projecting onto its plane stays strictly
            // feasible for every other facet.
            double best = 0.0;
            bool have_best = false;
            std::size_t best_k = 0;
            const bool outside = violated > 0;
            for (std::size_t k = 0; k < nf; ++k) {
                if (outside && slack[k] <= 0.0) continue;
                std::vector<double> proj(y.begin(), y.end());
                for (std::size_t i = 0; i < proj.size(); ++i) proj[i] -= slack[k] * region.normals[k][i];
                bool interior = true;
                for (std::size_t j = 0; j < nf; ++j) {
                    if (j == k) continue;
                    if (dot(region.normals[j], proj) - region.offsets[j] > -1e-12) {
                        interior = false;
                        break;
                    }
                }
                if (!interior) continue;
                const double dist = std::fabs(slack[k]);
                if (!have_best || dist < best - 1e-12) {
                    best = dist;
                    best_k = k;
                    have_best = true;
                } else if (std::fabs(dist - best) <= 1e-12) {
                    throw numeric_error("analytic_geometry: equidistant cone facets");
                }
            }
            if (!have_best) {
                throw numeric_error("analytic_geometry: projection lands on a cone edge");
            }
            g.beta0 = slack[best_k];
            g.beta1 = 0.0;
            return g;
        }
    }
    return g;
}

MultiscaleCounts direct_multiscale_counts(const RegionSpec& region, std::span<const double> y,
                                          const std::vector<double>& scales, std::int64_t replicates,
                                          std::uint64_t seed, int workers) {
    region.validate();
    check_point(region, y, "direct_multiscale_counts");
    if (replicates < 1) throw config_error("direct_multiscale_counts: replicates must be >= 1");
    if (scales.empty()) throw config_error("direct_multiscale_counts: no scales");
    for (std::size_t s = 0; s < scales.size(); ++s) {
        if (!(scales[s] > 0.0)) throw config_error("direct_multiscale_counts: scales must be positive");
        if (s > 0 && !(scales[s] > scales[s - 1]))
            throw config_error("direct_multiscale_counts: scales must be strictly increasing");
    }

    const auto dim = static_cast<std::size_t>(region.dim);
    const int nworkers = std::max(1, workers);
    MultiscaleCounts out;
    out.item_id = "region";
    out.scales = scales;

    for (std::size_t si = 0; si < scales.size(); ++si) {
        const double sigma = std::sqrt(scales[si]);
        std::vector<std::int64_t> hits(nworkers, 0);
        auto run = [&](int wid) {
            std::vector<std::vector<double>> coords(dim, std::vector<double>(kChunk));
            std::vector<const double*> ptrs(dim);
            for (std::size_t d = 0; d < dim; ++d) ptrs[d] = coords[d].data();
            std::vector<double> point(dim);
            const std::int64_t lo = replicates * wid / nworkers;
            const std::int64_t hi = replicates * (wid + 1) / nworkers;
            std::int64_t h = 0;
            for (std::int64_t b0 = lo; b0 < hi; b0 += static_cast<std::int64_t>(kChunk)) {
                const auto m = static_cast<std::size_t>(
                    std::min<std::int64_t>(kChunk, hi - b0));
                for (std::size_t r = 0; r < m; ++r) {
                    CounterStream stream(seed, si, static_cast<std::uint64_t>(b0) + r, 0);
                    for (std::size_t d = 0; d < dim; ++d) {
                        coords[d][r] = y[d] + sigma * stream.next_normal();
                    }
                }
                switch (region.kind) {
                    case RegionKind::half_space:
                        h += static_cast<std::int64_t>(
                            kernels::count_leq(coords[dim - 1].data(), m, -region.offset));
                        break;
                    case RegionKind::ball:
                        h += static_cast<std::int64_t>(kernels::count_sqdist_leq(
                            ptrs.data(), m, dim, region.center.data(),
                            region.radius * region.radius));
                        break;
                    case RegionKind::cone:
                        for (std::size_t r = 0; r < m; ++r) {
                            for (std::size_t d = 0; d < dim; ++d) point[d] = coords[d][r];
                            h += membership(region, point) ? 1 : 0;
                        }
                        break;
                }
            }
            hits[wid] = h;
        };
        if (nworkers == 1) {
            run(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(nworkers);
            for (int wid = 0; wid < nworkers; ++wid) pool.emplace_back(run, wid);
            for (auto& th : pool) th.join();
        }
        std::int64_t total = 0;
        for (const auto h : hits) total += h;
        out.replicates.push_back(replicates);
        out.hits.push_back(total);
    }
    return out;
}

ExperimentReport type1_experiment(const RegionSpec& region, std::span<const double> mu,
                                  double alpha, std::int64_t trials, ExperimentMode mode,
                                  const PipelineConfig& config,
                                  std::vector<TrialDiagnostic>* diagnostics,
                                  std::vector<double>* tested_pvalues) {
    region.validate();
    check_point(region, mu, "type1_experiment");
    if (trials < 1) throw config_error("type1_experiment: trials must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("type1_experiment: alpha must be in (0,1)");
    const Geometry at_mu = analytic_geometry(region, mu);
    if (!(std::fabs(at_mu.beta0) < 1e-9)) {
        throw config_error("type1_experiment: mu is not on the boundary (beta0 = " +
                           std::to_string(at_mu.beta0) + ")");
    }

    const auto dim = static_cast<std::size_t>(region.dim);
    const int nworkers = std::max(1, config.workers);
    const std::size_t ndiag = diagnostics ? 20 : 0;

    std::vector<std::uint8_t> qualifies(trials, 0);
    std::vector<std::uint8_t> rejects(trials, 0);
    std::vector<std::uint8_t> failed(trials, 0);
    std::vector<double> pvals(trials, std::numeric_limits<double>::quiet_NaN());
    std::vector<TrialDiagnostic> diag(ndiag);
    std::vector<std::uint8_t> diag_set(ndiag, 0);

    auto run = [&](int wid) {
        std::vector<double> point(dim);
        const std::int64_t lo = trials * wid / nworkers;
        const std::int64_t hi = trials * (wid + 1) / nworkers;
        for (std::int64_t t = lo; t < hi; ++t) {
            const std::uint64_t trial_seed = derive_seed(config.seed, 0xE1, static_cast<std::uint64_t>(t));
            CounterStream ystream(trial_seed, kTrialPointStream, 0, 0);
            for (std::size_t d = 0; d < dim; ++d) point[d] = mu[d] + ystream.next_normal();
            const bool outside = !membership(region, point);

            const MultiscaleCounts counts = direct_multiscale_counts(
                region, point, config.scales, config.replicates, trial_seed, 1);
            std::vector<ScalingModelFit> fits;
            for (const ScalingModel m : config.models) {
                try {
                    fits.push_back(fit_model(counts, m));
                } catch (const fit_error&) {
                    // model unusable on this draw; the remaining ones carry on
                }
            }
            if (fits.empty()) {
                failed[t] = 1;
                continue;
            }
            const AveragedFit avg = select_and_average(std::move(fits));
            const Geometry fitted = geometry_at_unit_scale(avg);
            const PValueTriple triple = pvalues_from_geometry(fitted);

            if (mode == ExperimentMode::au_unconditional) {
                qualifies[t] = 1;
                pvals[t] = triple.au;
                rejects[t] = triple.au < alpha ? 1 : 0;
            } else {
                if (outside) {
                    qualifies[t] = 1;
                    pvals[t] = triple.si_prime;
                    rejects[t] = triple.si_prime < alpha ? 1 : 0;
                }
            }
            if (static_cast<std::size_t>(t) < ndiag) {
                TrialDiagnostic d;
                d.trial = t;
                try {
                    d.analytic = analytic_geometry(region, point);
                } catch (const numeric_error&) {
                    // ambiguous projection: leave analytic at zero
                }
                d.fitted = fitted;
                d.pvalues = triple;
                d.outside = outside;
                diag[static_cast<std::size_t>(t)] = d;
                diag_set[static_cast<std::size_t>(t)] = 1;
            }
        }
    };
    if (nworkers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nworkers);
        for (int wid = 0; wid < nworkers; ++wid) pool.emplace_back(run, wid);
        for (auto& th : pool) th.join();
    }

    ExperimentReport report;
    report.target_alpha = alpha;
    report.total_trials = trials;
    for (std::int64_t t = 0; t < trials; ++t) {
        report.fit_failures += failed[t];
        if (qualifies[t]) {
            ++report.trials;
            report.rejections += rejects[t];
        }
    }
    if (report.trials == 0) {
        throw numeric_error("type1_experiment: no qualifying trials");
    }
    report.rate = static_cast<double>(report.rejections) / static_cast<double>(report.trials);
    report.binomial_se =
        std::sqrt(report.rate * (1.0 - report.rate) / static_cast<double>(report.trials));
    if (diagnostics) {
        diagnostics->clear();
        for (std::size_t i = 0; i < ndiag; ++i) {
            if (diag_set[i]) diagnostics->push_back(diag[i]);
        }
    }
    if (tested_pvalues) {
        tested_pvalues->clear();
        for (std::int64_t t = 0; t < trials; ++t) {
            if (qualifies[t]) tested_pvalues->push_back(pvals[t]);
        }
    }
    return report;
}

} // namespace msboot
