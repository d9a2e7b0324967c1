#include "msboot/errors.hpp"
#include "msboot/kernels.hpp"
#include "msboot/modelmap.hpp"
#include "msboot/normal.hpp"
#include "msboot/pvalues.hpp"
#include "msboot/rell.hpp"
#include "msboot/scaling.hpp"
#include "msboot/simulate.hpp"
#include "msboot/topology.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace msboot;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::vector<double> scales_from_string(const std::string& spec) {
    if (spec == "wide13") return scale_grid(GridKind::wide13);
    if (spec == "narrow10") return scale_grid(GridKind::narrow10);
    std::vector<double> scales;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            scales.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw config_error("bad scale value '" + tok + "'");
        }
    }
    if (scales.empty()) throw config_error("empty scale list");
    for (std::size_t i = 1; i < scales.size(); ++i) {
        if (!(scales[i] > scales[i - 1])) throw config_error("scales must be strictly increasing");
    }
    return scales;
}

std::vector<ScalingModel> models_from_string(const std::string& spec) {
    std::vector<ScalingModel> models;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) models.push_back(model_from_name(tok));
    if (models.empty()) throw config_error("empty model list");
    return models;
}

MatrixFormat format_from_string(const std::string& s) {
    if (s == "plain") return MatrixFormat::plain;
    if (s == "consel_mt") return MatrixFormat::consel_mt;
    throw config_error("unknown matrix format '" + s + "' (plain|consel_mt)");
}

void apply_kernel_choice(const std::string& choice) {
    if (choice.empty() || choice == "auto") return;
    if (choice == "scalar") {
        kernels::set_backend(kernels::Backend::scalar);
    } else if (choice == "avx2") {
        if (!kernels::set_backend(kernels::Backend::avx2)) {
            throw config_error("avx2 kernels not supported on this machine");
        }
    } else {
        throw config_error("unknown kernel backend '" + choice + "'");
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot write '" + path.string() + "'");
    return os;
}

struct ItemResult {
    std::string id;
    Geometry geom;
    PValueTriple pv;
    std::string fit_status;
    std::string weight_desc;
};

// Full fit for one item; items whose counts are degenerate at every scale
// (or all but one) cannot support the scaling fit, so they fall back to the
// clamped proportion at the scale closest to sigma^2 = 1 with a flat
// boundary. The table then still carries finite BP/AU/SI for them.
ItemResult fit_item(const MultiscaleCounts& counts, const std::vector<ScalingModel>& models) {
    ItemResult r;
    r.id = counts.item_id;
    std::size_t nondeg = 0;
    for (std::size_t s = 0; s < counts.n_scales(); ++s) {
        if (counts.hits[s] != 0 && counts.hits[s] != counts.replicates[s]) ++nondeg;
    }
    std::vector<ScalingModel> usable;
    for (const auto m : models) {
        if (static_cast<std::size_t>(model_n_params(m)) <= nondeg) usable.push_back(m);
    }
    if (usable.empty()) {
        std::size_t pick = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < counts.n_scales(); ++s) {
            const double gap = std::fabs(std::log(counts.scales[s]));
            if (gap < best) {
                best = gap;
                pick = s;
            }
        }
        const double b = static_cast<double>(counts.replicates[pick]);
        const double clamped =
            std::min(std::max(static_cast<double>(counts.hits[pick]), 0.5), b - 0.5) / b;
        Geometry g;
        g.beta0 = upper_tail_inverse(clamped);
        g.beta1 = 0.0;
        g.se_beta0 = std::sqrt(clamped * (1.0 - clamped) / b) / normal_pdf(g.beta0);
        g.se_beta1 = 0.0;
        g.cov01 = 0.0;
        r.geom = g;
        r.pv = pvalues_from_geometry(g);
        r.fit_status = "degenerate";
        r.weight_desc = "-";
        return r;
    }
    std::vector<ScalingModelFit> fits;
    for (const auto m : usable) fits.push_back(fit_model(counts, m));
    const AveragedFit avg = select_and_average(std::move(fits));
    r.geom = geometry_at_unit_scale(avg);
    r.pv = pvalues_from_geometry(r.geom);
    r.fit_status = "ok";
    std::string wd;
    for (std::size_t k = 0; k < avg.fits.size(); ++k) {
        if (!wd.empty()) wd += ",";
        wd += std::string(model_name(avg.fits[k].model)) + "=" + fmt(avg.weights[k]);
    }
    r.weight_desc = wd;
    return r;
}

const char* sig_flag(double p, TestMode mode, double alpha) {
    if (mode == TestMode::outside && p < alpha) return "reject";
    if (mode == TestMode::inside && p > 1.0 - alpha) return "support";
    return "";
}

void write_pvalues_tsv(std::ostream& os, const std::vector<ItemResult>& items, double alpha) {
    os << "item\tbp\tse_bp\tau\tse_au\tsi\tse_si\tbeta0\tse_beta0\tbeta1\tse_beta1"
          "\tmode\tsig_bp\tsig_au\tsig_si\tfit_status\takaike_weights\n";
    for (const auto& it : items) {
        const TestMode mode = it.pv.mode;
        os << it.id << '\t' << fmt(it.pv.bp) << '\t' << fmt(it.pv.se_bp.value_or(0.0)) << '\t'
           << fmt(it.pv.au) << '\t' << fmt(it.pv.se_au.value_or(0.0)) << '\t'
           << fmt(it.pv.si_prime) << '\t' << fmt(it.pv.se_si.value_or(0.0)) << '\t'
           << fmt(it.geom.beta0) << '\t' << fmt(it.geom.se_beta0.value_or(0.0)) << '\t'
           << fmt(it.geom.beta1) << '\t' << fmt(it.geom.se_beta1.value_or(0.0)) << '\t'
           << (mode == TestMode::outside ? "outside" : "inside") << '\t'
           << sig_flag(it.pv.bp, mode, alpha) << '\t' << sig_flag(it.pv.au, mode, alpha) << '\t'
           << sig_flag(it.pv.si_prime, mode, alpha) << '\t' << it.fit_status << '\t'
           << it.weight_desc << '\n';
    }
}

// psi-vs-sigma^2 table for model diagnostics; degenerate scales are shown
// with counts clamped to [0.5, B-0.5] and flagged.
void write_psi_tsv(std::ostream& os, const std::vector<MultiscaleCounts>& items) {
    os << "item\tsigma2\tB\thits\tpsi\tse\tdegenerate\n";
    for (const auto& item : items) {
        for (std::size_t s = 0; s < item.n_scales(); ++s) {
            const double b = static_cast<double>(item.replicates[s]);
            const bool degen = item.hits[s] == 0 || item.hits[s] == item.replicates[s];
            const double clamped =
                std::min(std::max(static_cast<double>(item.hits[s]), 0.5), b - 0.5) / b;
            const double sigma = std::sqrt(item.scales[s]);
            const double q = upper_tail_inverse(clamped);
            const double psi = sigma * q;
            const double se = sigma * std::sqrt(clamped * (1.0 - clamped) / b) / normal_pdf(q);
            os << item.item_id << '\t' << fmt(item.scales[s]) << '\t' << item.replicates[s]
               << '\t' << item.hits[s] << '\t' << fmt(psi) << '\t' << fmt(se) << '\t'
               << (degen ? 1 : 0) << '\n';
        }
    }
}

void write_edge_table(std::ostream& os, const EdgeAssociation& assoc,
                      const std::vector<std::string>& tree_labels) {
    os << "edge\tpartition\tn_trees\ttrees\n";
    for (std::size_t e = 0; e < assoc.edges.size(); ++e) {
        os << 'E' << e + 1 << '\t' << assoc.edges[e].display() << '\t'
           << assoc.members[e].size() << '\t';
        for (std::size_t i = 0; i < assoc.members[e].size(); ++i) {
            if (i) os << ',';
            const std::size_t t = assoc.members[e][i];
            os << (t < tree_labels.size() ? tree_labels[t] : "T" + std::to_string(t + 1));
        }
        os << '\n';
    }
}

struct BootstrapArgs {
    std::string input;
    std::string format = "plain";
    std::string topologies;
    int ntaxa = 0;
    int outgroup = 0;
    std::string scales = "wide13";
    std::int64_t nb = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
    std::string kernels = "auto";
    bool sort_loglik = false;
};

void add_bootstrap_options(CLI::App* cmd, BootstrapArgs& args) {
    cmd->add_option("--in", args.input, "site-wise log-likelihood matrix")->required();
    cmd->add_option("--format", args.format, "plain|consel_mt");
    cmd->add_option("--topologies", args.topologies, "topology list file (enables edge counts)");
    cmd->add_option("--ntaxa", args.ntaxa, "number of taxa (default: max label in file)");
    cmd->add_option("--outgroup", args.outgroup, "outgroup taxon (default: highest)");
    cmd->add_option("--scales", args.scales, "wide13|narrow10|comma-separated sigma^2");
    cmd->add_option("--nb", args.nb, "bootstrap replicates per scale");
    cmd->add_option("--seed", args.seed, "RNG seed");
    cmd->add_option("--threads", args.threads, "worker threads");
    cmd->add_option("--kernels", args.kernels, "auto|scalar|avx2");
    cmd->add_flag("--sort-loglik", args.sort_loglik,
                  "relabel trees in descending full-data log-likelihood order");
    cmd->add_option("--out", args.out, "output directory")->required();
}

struct LoadedRun {
    SitewiseLogLik matrix;
    std::vector<Topology> topologies;
    EdgeAssociation assoc;
    EdgeGrouping grouping;
    bool has_edges = false;
};

// Permutes matrix columns (and the topology list alongside) into descending
// full-data log-likelihood order, so labels T1, T2, ... follow the ranking.
void sort_by_total_loglik(SitewiseLogLik& m, std::vector<Topology>* topologies) {
    const std::vector<double> totals = total_loglik(m);
    std::vector<std::size_t> order(m.k);
    for (std::size_t i = 0; i < m.k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
    SitewiseLogLik sorted = m;
    for (std::size_t t = 0; t < m.n; ++t)
        for (std::size_t i = 0; i < m.k; ++i) sorted.at(t, i) = m.at(t, order[i]);
    m.xi = std::move(sorted.xi);
    if (topologies && !topologies->empty()) {
        std::vector<Topology> reordered;
        reordered.reserve(topologies->size());
        for (const std::size_t i : order) reordered.push_back((*topologies)[i]);
        *topologies = std::move(reordered);
    }
}

LoadedRun load_run(const BootstrapArgs& args) {
    LoadedRun run;
    run.matrix = load_matrix_file(args.input, format_from_string(args.format));
    if (!args.topologies.empty()) {
        std::ifstream tf(args.topologies);
        if (!tf) throw io_error("cannot open '" + args.topologies + "'");
        int n = args.ntaxa;
        if (n == 0) {
            // infer N as the highest taxon label present
            std::string all;
            std::string line;
            while (std::getline(tf, line)) all += line;
            for (const char c : all)
                if (c >= '1' && c <= '9') n = std::max(n, c - '0');
            tf.clear();
            tf.seekg(0);
        }
        run.topologies = parse_topology_file(tf, n, args.outgroup);
        if (run.topologies.size() != run.matrix.k) {
            throw config_error("topology file has " + std::to_string(run.topologies.size()) +
                               " trees but the matrix has " + std::to_string(run.matrix.k) +
                               " columns");
        }
        if (args.sort_loglik) sort_by_total_loglik(run.matrix, &run.topologies);
        run.assoc = associate(run.topologies);
        run.grouping.members = run.assoc.members;
        for (std::size_t e = 0; e < run.assoc.edges.size(); ++e) {
            run.grouping.ids.push_back("E" + std::to_string(e + 1));
        }
        run.has_edges = true;
    } else if (args.sort_loglik) {
        sort_by_total_loglik(run.matrix, nullptr);
    }
    return run;
}

BootstrapResult run_bootstrap(const BootstrapArgs& args, const LoadedRun& run) {
    if (args.nb < 100) throw config_error("--nb must be >= 100");
    BootstrapOptions opt;
    opt.scales = scales_from_string(args.scales);
    opt.replicates = args.nb;
    opt.seed = args.seed;
    opt.workers = args.threads;
    return multiscale_bootstrap(run.matrix, opt, run.has_edges ? &run.grouping : nullptr);
}

void write_bootstrap_outputs(const fs::path& dir, const LoadedRun& run, const BootstrapResult& res) {
    fs::create_directories(dir);
    {
        auto os = open_out(dir / "tree_counts.tsv");
        write_counts_tsv(os, res.tree_counts);
    }
    if (run.has_edges) {
        auto os = open_out(dir / "edge_counts.tsv");
        write_counts_tsv(os, res.edge_counts);
        auto et = open_out(dir / "edges.tsv");
        write_edge_table(et, run.assoc, run.matrix.tree_labels);
    }
    auto si = open_out(dir / "scales.tsv");
    si << "requested_sigma2\trealized_sigma2\tn_prime\tties\n";
    for (const auto& s : res.scale_info) {
        si << fmt(s.requested) << '\t' << fmt(s.realized) << '\t' << s.n_prime << '\t' << s.ties
           << '\n';
    }
}

int cmd_bootstrap(const BootstrapArgs& args) {
    apply_kernel_choice(args.kernels);
    const LoadedRun run = load_run(args);
    const BootstrapResult res = run_bootstrap(args, run);
    write_bootstrap_outputs(args.out, run, res);
    return 0;
}

void fit_and_write(const fs::path& dir, const std::string& stem,
                   const std::vector<MultiscaleCounts>& counts,
                   const std::vector<ScalingModel>& models, double alpha) {
    std::vector<ItemResult> items;
    items.reserve(counts.size());
    for (const auto& c : counts) items.push_back(fit_item(c, models));
    auto os = open_out(dir / ("pvalues_" + stem + ".tsv"));
    write_pvalues_tsv(os, items, alpha);
    auto ps = open_out(dir / ("psi_" + stem + ".tsv"));
    write_psi_tsv(ps, counts);
}

int cmd_pvalues(const BootstrapArgs& args, const std::string& models_spec, double alpha) {
    apply_kernel_choice(args.kernels);
    if (!(alpha > 0.0 && alpha <= 0.5)) throw config_error("--alpha must be in (0, 0.5]");
    const std::vector<ScalingModel> models = models_from_string(models_spec);
    const LoadedRun run = load_run(args);
    const BootstrapResult res = run_bootstrap(args, run);
    write_bootstrap_outputs(args.out, run, res);
    const fs::path dir(args.out);
    fit_and_write(dir, "trees", res.tree_counts, models, alpha);
    if (run.has_edges) fit_and_write(dir, "edges", res.edge_counts, models, alpha);
    return 0;
}

int cmd_fit(const std::string& counts_path, const std::string& models_spec, double alpha,
            const std::string& out) {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw config_error("--alpha must be in (0, 0.5]");
    std::ifstream is(counts_path);
    if (!is) throw io_error("cannot open '" + counts_path + "'");
    const std::vector<MultiscaleCounts> counts = read_counts_tsv(is);
    const std::vector<ScalingModel> models = models_from_string(models_spec);
    fs::create_directories(out);
    fit_and_write(out, "items", counts, models, alpha);
    return 0;
}

int cmd_shortcut(double bp, double au) {
    const Geometry g = geometry_from_bp_au(bp, au);
    // Raw selective ratios for both orientations; values capped at the
    // boundary 1 (a boundary observation is never rejected).
    const double si_region = std::min(1.0, tail_ratio(g.beta0 - g.beta1, -g.beta1));
    const double si_complement = std::min(1.0, tail_ratio(-g.beta0 + g.beta1, g.beta1));
    const double sp = si_prime(g);
    std::cout << "beta0\t" << fmt(g.beta0) << '\n';
    std::cout << "beta1\t" << fmt(g.beta1) << '\n';
    std::cout << "si_region\t" << fmt(si_region) << '\n';
    std::cout << "si_complement\t" << fmt(si_complement) << '\n';
    std::cout << "si_prime\t" << fmt(sp) << '\n';
    return 0;
}

int cmd_counts(int taxa, const std::string& target, const std::string& mode) {
    RegionTarget rt;
    if (target == "tree") rt = RegionTarget::tree;
    else if (target == "edge") rt = RegionTarget::edge;
    else throw config_error("--target must be tree|edge");
    TestMode tm;
    if (mode == "inside") tm = TestMode::inside;
    else if (mode == "outside") tm = TestMode::outside;
    else throw config_error("--mode must be inside|outside");
    const RegionCounts rc = region_counts(taxa, rt, tm);
    std::cout << "K_all\t" << rc.k_all << '\n';
    std::cout << "K_select\t" << rc.k_select << '\n';
    std::cout << "K_true\t" << rc.k_true << '\n';
    std::cout << rc.k_select << '/' << rc.k_true << '/' << rc.k_all << '\n';
    return 0;
}

// --- simulate -----------------------------------------------------------

struct SimulateConfig {
    RegionSpec region;
    std::vector<double> scales = scale_grid(GridKind::wide13);
    std::int64_t nb = 10000;
    std::int64_t trials = 0;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    std::string mode = "au_unconditional";
    std::vector<double> mu;
    std::vector<double> y;
    std::vector<ScalingModel> models = {ScalingModel::poly2, ScalingModel::poly3,
                                        ScalingModel::sing3};
};

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    double x = 0.0;
    while (ss >> x) v.push_back(x);
    return v;
}

SimulateConfig parse_simulate_config(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw parse_error("expected 'key = value'", lineno);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    SimulateConfig cfg;
    const auto get = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    const std::string kind = get("kind").value_or("");
    const int dim = get("dim") ? std::stoi(*get("dim")) : 2;
    if (kind == "half_space") {
        cfg.region = RegionSpec::half_space(dim, get("offset") ? std::stod(*get("offset")) : 0.0);
    } else if (kind == "ball") {
        if (!get("center") || !get("radius")) throw config_error("ball needs center and radius");
        cfg.region = RegionSpec::ball(parse_vector(*get("center")), std::stod(*get("radius")));
    } else if (kind == "cone") {
        if (!get("normals") || !get("offsets")) throw config_error("cone needs normals and offsets");
        std::vector<std::vector<double>> normals;
        std::stringstream ss(*get("normals"));
        std::string row;
        while (std::getline(ss, row, ';')) normals.push_back(parse_vector(row));
        cfg.region = RegionSpec::cone(std::move(normals), parse_vector(*get("offsets")));
    } else {
        throw config_error("config: kind must be half_space|ball|cone");
    }
    if (get("scales")) cfg.scales = scales_from_string(*get("scales"));
    if (get("nb")) cfg.nb = std::stoll(*get("nb"));
    if (get("trials")) cfg.trials = std::stoll(*get("trials"));
    if (get("alpha")) cfg.alpha = std::stod(*get("alpha"));
    if (get("seed")) cfg.seed = std::stoull(*get("seed"));
    if (get("mode")) cfg.mode = *get("mode");
    if (get("mu")) cfg.mu = parse_vector(*get("mu"));
    if (get("y")) cfg.y = parse_vector(*get("y"));
    if (get("models")) cfg.models = models_from_string(*get("models"));
    return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& out, int threads,
                 const std::string& kernel_choice) {
    apply_kernel_choice(kernel_choice);
    std::ifstream is(config_path);
    if (!is) throw io_error("cannot open '" + config_path + "'");
    const SimulateConfig cfg = parse_simulate_config(is);
    fs::create_directories(out);
    const fs::path dir(out);

    if (cfg.mode == "geometry") {
        if (cfg.y.empty()) throw config_error("geometry mode needs y = <point>");
        const MultiscaleCounts counts = direct_multiscale_counts(
            cfg.region, cfg.y, cfg.scales, cfg.nb, cfg.seed, threads);
        {
            auto os = open_out(dir / "counts.tsv");
            write_counts_tsv(os, {counts});
            auto ps = open_out(dir / "psi_items.tsv");
            write_psi_tsv(ps, {counts});
        }
        const ItemResult item = fit_item(counts, cfg.models);
        const Geometry exact = analytic_geometry(cfg.region, cfg.y);
        auto os = open_out(dir / "geometry.tsv");
        os << "beta0_analytic\tbeta1_analytic\tbeta0_fit\tse_beta0\tbeta1_fit\tse_beta1"
              "\tbp\tau\tsi\tfit_status\n";
        os << fmt(exact.beta0) << '\t' << fmt(exact.beta1) << '\t' << fmt(item.geom.beta0) << '\t'
           << fmt(item.geom.se_beta0.value_or(0.0)) << '\t' << fmt(item.geom.beta1) << '\t'
           << fmt(item.geom.se_beta1.value_or(0.0)) << '\t' << fmt(item.pv.bp) << '\t'
           << fmt(item.pv.au) << '\t' << fmt(item.pv.si_prime) << '\t' << item.fit_status << '\n';
        return 0;
    }

    ExperimentMode mode;
    if (cfg.mode == "au_unconditional") mode = ExperimentMode::au_unconditional;
    else if (cfg.mode == "si_conditional") mode = ExperimentMode::si_conditional;
    else throw config_error("config: mode must be au_unconditional|si_conditional|geometry");
    if (cfg.mu.empty()) throw config_error("experiment mode needs mu = <boundary point>");
    if (cfg.trials < 1) throw config_error("experiment mode needs trials >= 1");

    PipelineConfig pipe;
    pipe.scales = cfg.scales;
    pipe.replicates = cfg.nb;
    pipe.models = cfg.models;
    pipe.seed = cfg.seed;
    pipe.workers = threads;
    std::vector<TrialDiagnostic> diag;
    const ExperimentReport report =
        type1_experiment(cfg.region, cfg.mu, cfg.alpha, cfg.trials, mode, pipe, &diag);

    {
        auto os = open_out(dir / "report.tsv");
        os << "mode\ttotal_trials\tqualifying\trejections\trate\tbinomial_se\talpha"
              "\tfit_failures\n";
        os << cfg.mode << '\t' << report.total_trials << '\t' << report.trials << '\t'
           << report.rejections << '\t' << fmt(report.rate) << '\t' << fmt(report.binomial_se)
           << '\t' << fmt(report.target_alpha) << '\t' << report.fit_failures << '\n';
    }
    auto os = open_out(dir / "geometry_comparison.tsv");
    os << "trial\toutside\tbeta0_analytic\tbeta1_analytic\tbeta0_fit\tse_beta0"
          "\tbeta1_fit\tse_beta1\tbp\tau\tsi\n";
    for (const auto& d : diag) {
        os << d.trial << '\t' << (d.outside ? 1 : 0) << '\t' << fmt(d.analytic.beta0) << '\t'
           << fmt(d.analytic.beta1) << '\t' << fmt(d.fitted.beta0) << '\t'
           << fmt(d.fitted.se_beta0.value_or(0.0)) << '\t' << fmt(d.fitted.beta1) << '\t'
           << fmt(d.fitted.se_beta1.value_or(0.0)) << '\t' << fmt(d.pvalues.bp) << '\t'
           << fmt(d.pvalues.au) << '\t' << fmt(d.pvalues.si_prime) << '\n';
    }
    return 0;
}

int cmd_modelmap(const std::string& input, const std::string& format, int rank, int dims,
                 bool project_out_full, const std::string& center, double biplot_alpha,
                 const std::string& out) {
    const SitewiseLogLik m = load_matrix_file(input, format_from_string(format));
    MapCentering centering = MapCentering::mean_column;
    std::size_t center_col = 0;
    if (center != "mean") {
        if (center.rfind("star:", 0) != 0) throw config_error("--center must be mean or star:<column>");
        centering = MapCentering::designated_column;
        center_col = static_cast<std::size_t>(std::stoul(center.substr(5))) - 1;
    }
    const ModelMapResult map =
        map_coordinates(m, rank, dims, project_out_full, centering, center_col, biplot_alpha);
    if (map.effective_rank < rank) {
        std::cerr << "modelmap: numerical rank " << map.effective_rank
                  << " below requested rank " << rank << "; truncated further\n";
    }
    fs::create_directories(out);
    const fs::path dir(out);
    {
        auto os = open_out(dir / "map.csv");
        write_map_csv(os, map);
    }
    {
        auto os = open_out(dir / "map.svg");
        write_map_svg(os, map);
    }
    auto os = open_out(dir / "singular_values.tsv");
    os << "index\tsigma\n";
    for (std::size_t i = 0; i < map.singular_values.size(); ++i) {
        os << i + 1 << '\t' << fmt(map.singular_values[i]) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiscale bootstrap p-values for the problem of regions"};
    app.require_subcommand(1);

    BootstrapArgs boot_args;
    auto* boot = app.add_subcommand("bootstrap", "RELL multiscale bootstrap counts");
    add_bootstrap_options(boot, boot_args);

    BootstrapArgs pv_args;
    std::string pv_models = "poly2,poly3,sing3";
    double pv_alpha = 0.05;
    auto* pvalues = app.add_subcommand("pvalues", "full pipeline: counts, fits, p-values");
    add_bootstrap_options(pvalues, pv_args);
    pvalues->add_option("--models", pv_models, "comma-separated scaling models");
    pvalues->add_option("--alpha", pv_alpha, "significance level");

    std::string fit_counts;
    std::string fit_models = "poly2,poly3,sing3";
    double fit_alpha = 0.05;
    std::string fit_out;
    auto* fit = app.add_subcommand("fit", "fit scaling models to persisted counts");
    fit->add_option("--counts", fit_counts, "counts TSV from bootstrap")->required();
    fit->add_option("--models", fit_models, "comma-separated scaling models");
    fit->add_option("--alpha", fit_alpha, "significance level");
    fit->add_option("--out", fit_out, "output directory")->required();

    double sc_bp = 0.0;
    double sc_au = 0.0;
    auto* shortcut = app.add_subcommand("shortcut", "geometry and SI from published BP and AU");
    shortcut->add_option("bp", sc_bp, "bootstrap probability")->required();
    shortcut->add_option("au", sc_au, "approximately unbiased p-value")->required();

    std::string sim_config;
    std::string sim_out;
    int sim_threads = 1;
    std::string sim_kernels = "auto";
    auto* simulate = app.add_subcommand("simulate", "synthetic-region experiments");
    simulate->add_option("--config", sim_config, "key = value experiment config")->required();
    simulate->add_option("--out", sim_out, "output directory")->required();
    simulate->add_option("--threads", sim_threads, "worker threads");
    simulate->add_option("--kernels", sim_kernels, "auto|scalar|avx2");

    int ct_taxa = 0;
    std::string ct_target;
    std::string ct_mode;
    auto* counts = app.add_subcommand("counts", "region counts for trees and edges");
    counts->add_option("--taxa", ct_taxa, "number of taxa")->required();
    counts->add_option("--target", ct_target, "tree|edge")->required();
    counts->add_option("--mode", ct_mode, "inside|outside")->required();

    std::string mm_in;
    std::string mm_format = "plain";
    int mm_rank = 10;
    int mm_dims = 2;
    bool mm_project = false;
    std::string mm_center = "mean";
    double mm_alpha = 1.0;
    std::string mm_out;
    auto* modelmap = app.add_subcommand("modelmap", "PCA biplot of model log-likelihood vectors");
    modelmap->add_option("--in", mm_in, "site-wise log-likelihood matrix")->required();
    modelmap->add_option("--format", mm_format, "plain|consel_mt");
    modelmap->add_option("--rank", mm_rank, "singular values kept for the full-model inverse");
    modelmap->add_option("--dims", mm_dims, "2 or 3");
    modelmap->add_flag("--project-out-full", mm_project, "top view: project out the full-model direction");
    modelmap->add_option("--center", mm_center, "mean or star:<column>");
    modelmap->add_option("--biplot-alpha", mm_alpha, "singular-value split between scores and loadings");
    modelmap->add_option("--out", mm_out, "output directory")->required();

    try {
        app.parse(argc, argv);
        if (boot->parsed()) return cmd_bootstrap(boot_args);
        if (pvalues->parsed()) return cmd_pvalues(pv_args, pv_models, pv_alpha);
        if (fit->parsed()) return cmd_fit(fit_counts, fit_models, fit_alpha, fit_out);
        if (shortcut->parsed()) return cmd_shortcut(sc_bp, sc_au);
        if (simulate->parsed()) return cmd_simulate(sim_config, sim_out, sim_threads, sim_kernels);
        if (counts->parsed()) return cmd_counts(ct_taxa, ct_target, ct_mode);
        if (modelmap->parsed())
            return cmd_modelmap(mm_in, mm_format, mm_rank, mm_dims, mm_project, mm_center,
                                mm_alpha, mm_out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::config);
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::parse);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::config);
    } catch (const fit_error& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::fit);
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numeric);
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
