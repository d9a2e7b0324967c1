#include "msboot/rell.hpp"

#include "msboot/errors.hpp"
#include "msboot/kernels.hpp"
#include "msboot/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <thread>

namespace msboot {

namespace {

std::vector<std::string_view> tokenize(const std::string& line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(std::string_view(line).substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line, std::size_t col) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw parse_error("non-numeric token '" + std::string(tok) + "'", line, col);
    }
    if (!std::isfinite(value)) {
        throw parse_error("non-finite log-likelihood '" + std::string(tok) + "'", line, col);
    }
    return value;
}

std::size_t parse_dim(std::string_view tok, std::size_t line, std::size_t col) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || value == 0) {
        throw parse_error("expected a positive integer, got '" + std::string(tok) + "'", line, col);
    }
    return value;
}

} // namespace

SitewiseLogLik load_matrix(std::istream& is, MatrixFormat format) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        header_line = line;
        header = tokenize(header_line);
        break;
    }
    if (header.size() < 2) {
        throw parse_error("expected a two-integer dimension header", lineno);
    }
    const std::size_t first = parse_dim(header[0], lineno, 1);
    const std::size_t second = parse_dim(header[1], lineno, 2);

    SitewiseLogLik m;
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (format == MatrixFormat::plain) {
        m.n = first;
        m.k = second;
        rows = m.n;
        cols = m.k;
    } else {
        m.k = first;
        m.n = second;
        rows = m.k; // one row per tree, transposed on ingest
        cols = m.n;
    }
    m.xi.assign(m.n * m.k, 0.0);

    // Values may wrap across physical lines; consume tokens row by row.
    std::size_t row = 0;
    std::size_t col = 0;
    while (row < rows && std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        for (const auto tok : tokenize(line)) {
            if (row >= rows) {
                throw parse_error("more values than the header promises", lineno, col + 1);
            }
            const double v = parse_double(tok, lineno, col + 1);
            if (format == MatrixFormat::plain) {
                m.at(row, col) = v;
            } else {
                m.at(col, row) = v;
            }
            if (++col == cols) {
                col = 0;
                ++row;
            }
        }
    }
    if (row != rows || col != 0) {
        throw parse_error("matrix ended early: got " + std::to_string(row) + " full rows of " +
                              std::to_string(rows) + " expected",
                          lineno);
    }
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!tokenize(line).empty()) {
            throw parse_error("more values than the header promises", lineno);
        }
    }
    m.tree_labels.reserve(m.k);
    for (std::size_t i = 0; i < m.k; ++i) m.tree_labels.push_back("T" + std::to_string(i + 1));
    return m;
}

SitewiseLogLik load_matrix_file(const std::string& path, MatrixFormat format) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return load_matrix(in, format);
}

std::vector<double> resample_loglik(const SitewiseLogLik& xi, const ReplicateWeights& weights) {
    if (weights.w.size() != xi.n) {
        throw config_error("resample_loglik: weight vector has " + std::to_string(weights.w.size()) +
                           " entries for " + std::to_string(xi.n) + " sites");
    }
    std::vector<double> out(xi.k);
    kernels::weighted_rowsum(xi.xi.data(), xi.n, xi.k, weights.w.data(), out.data());
    return out;
}

MlResult ml_item(std::span<const double> loglik) {
    if (loglik.empty()) throw config_error("ml_item: empty log-likelihood vector");
    MlResult r;
    r.index = kernels::argmax_lowest(loglik.data(), loglik.size(), &r.tie);
    return r;
}

double loglik_diff_variance(const SitewiseLogLik& xi, std::size_t i, std::size_t j) {
    if (i >= xi.k || j >= xi.k) throw config_error("loglik_diff_variance: tree index out of range");
    if (i == j) return 0.0;
    // Columns are strided; gather once then hand to the kernel.
    std::vector<double> a(xi.n);
    std::vector<double> b(xi.n);
    for (std::size_t t = 0; t < xi.n; ++t) {
        a[t] = xi.at(t, i);
        b[t] = xi.at(t, j);
    }
    return kernels::squared_distance(a.data(), b.data(), xi.n);
}

std::vector<double> total_loglik(const SitewiseLogLik& xi) {
    std::vector<double> sums(xi.k, 0.0);
    std::vector<std::uint32_t> ones(xi.n, 1);
    kernels::weighted_rowsum(xi.xi.data(), xi.n, xi.k, ones.data(), sums.data());
    return sums;
}

BootstrapResult multiscale_bootstrap(const SitewiseLogLik& xi, const BootstrapOptions& options,
                                     const EdgeGrouping* grouping) {
    if (xi.n == 0 || xi.k == 0) throw config_error("multiscale_bootstrap: empty matrix");
    if (options.replicates < 1) throw config_error("multiscale_bootstrap: replicates must be >= 1");
    if (options.scales.empty()) throw config_error("multiscale_bootstrap: no scales");

    // Realize the grid: n' = round(n / sigma^2); duplicates collapse.
    std::vector<ScaleInfo> info;
    for (const double s2 : options.scales) {
        if (!(s2 > 0.0)) throw config_error("multiscale_bootstrap: scales must be positive");
        const auto np = static_cast<std::int64_t>(std::llround(static_cast<double>(xi.n) / s2));
        if (np < 1) {
            throw config_error("multiscale_bootstrap: sigma^2 = " + std::to_string(s2) +
                               " gives n' < 1 for n = " + std::to_string(xi.n));
        }
        ScaleInfo si;
        si.requested = s2;
        si.n_prime = static_cast<std::uint64_t>(np);
        si.realized = static_cast<double>(xi.n) / static_cast<double>(np);
        if (!info.empty() && info.back().n_prime == si.n_prime) continue;
        info.push_back(si);
    }

    const auto n_scales = info.size();
    const auto b_total = options.replicates;
    const int workers = std::max(1, options.workers);

    std::vector<std::vector<std::int64_t>> counts(n_scales, std::vector<std::int64_t>(xi.k, 0));
    std::vector<std::int64_t> ties(n_scales, 0);

    for (std::size_t si = 0; si < n_scales; ++si) {
        const std::uint64_t n_prime = info[si].n_prime;
        std::vector<std::vector<std::int64_t>> local(workers, std::vector<std::int64_t>(xi.k, 0));
        std::vector<std::int64_t> local_ties(workers, 0);
        auto run = [&](int wid) {
            std::vector<std::uint32_t> w(xi.n);
            std::vector<double> acc(xi.k);
            const std::int64_t lo = b_total * wid / workers;
            const std::int64_t hi = b_total * (wid + 1) / workers;
            for (std::int64_t b = lo; b < hi; ++b) {
                CounterStream stream(options.seed, si, static_cast<std::uint64_t>(b), 0);
                std::fill(w.begin(), w.end(), 0u);
                for (std::uint64_t d = 0; d < n_prime; ++d) {
                    ++w[stream.next_below(xi.n)];
                }
                kernels::weighted_rowsum(xi.xi.data(), xi.n, xi.k, w.data(), acc.data());
                bool tie = false;
                const std::size_t best = kernels::argmax_lowest(acc.data(), xi.k, &tie);
                ++local[wid][best];
                local_ties[wid] += tie ? 1 : 0;
            }
        };
        if (workers == 1) {
            run(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int wid = 0; wid < workers; ++wid) pool.emplace_back(run, wid);
            for (auto& th : pool) th.join();
        }
        for (int wid = 0; wid < workers; ++wid) {
            for (std::size_t i = 0; i < xi.k; ++i) counts[si][i] += local[wid][i];
            ties[si] += local_ties[wid];
        }
        info[si].ties = ties[si];
    }

    BootstrapResult result;
    result.scale_info = info;
    result.tree_counts.reserve(xi.k);
    for (std::size_t i = 0; i < xi.k; ++i) {
        MultiscaleCounts c;
        c.item_id = i < xi.tree_labels.size() ? xi.tree_labels[i] : "T" + std::to_string(i + 1);
        for (std::size_t si = 0; si < n_scales; ++si) {
            c.scales.push_back(info[si].realized);
            c.replicates.push_back(b_total);
            c.hits.push_back(counts[si][i]);
        }
        result.tree_counts.push_back(std::move(c));
    }
    if (grouping) {
        for (std::size_t e = 0; e < grouping->members.size(); ++e) {
            MultiscaleCounts c;
            c.item_id = e < grouping->ids.size() ? grouping->ids[e] : "E" + std::to_string(e + 1);
            for (std::size_t si = 0; si < n_scales; ++si) {
                std::int64_t hits = 0;
                for (const std::size_t tree : grouping->members[e]) {
                    if (tree >= xi.k) throw config_error("edge grouping references tree out of range");
                    hits += counts[si][tree];
                }
                c.scales.push_back(info[si].realized);
                c.replicates.push_back(b_total);
                c.hits.push_back(hits);
            }
            result.edge_counts.push_back(std::move(c));
        }
    }
    return result;
}

} // namespace msboot
