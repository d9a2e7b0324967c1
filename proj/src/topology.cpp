#include "msboot/topology.hpp"

#include "msboot/errors.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <map>
#include <memory>

namespace msboot {

namespace {

// Internal adjacency form: leaves are node ids 0..N-1 (taxon t <-> id t-1),
// internal nodes follow.
struct AdjTree {
    int n_taxa = 0;
    std::vector<std::vector<int>> adj;

    int add_node() {
        adj.emplace_back();
        return static_cast<int>(adj.size()) - 1;
    }
    void link(int a, int b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
};

struct ParseNode {
    int taxon = -1; // >= 0 for leaves
    std::vector<std::unique_ptr<ParseNode>> kids;
};

struct Parser {
    std::string_view text;
    std::size_t pos = 0;
    int n_taxa = 0;

    char peek() const { return pos < text.size() ? text[pos] : '\0'; }

    void skip_space() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    std::unique_ptr<ParseNode> parse_node() {
        skip_space();
        const char c = peek();
        if (c >= '1' && c <= '9') {
            ++pos;
            const int taxon = c - '0';
            if (taxon > n_taxa) {
                throw parse_error("taxon " + std::to_string(taxon) + " exceeds N=" +
                                      std::to_string(n_taxa),
                                  1, pos);
            }
            auto node = std::make_unique<ParseNode>();
            node->taxon = taxon - 1;
            return node;
        }
        if (c == '(') {
            ++pos;
            auto node = std::make_unique<ParseNode>();
            while (true) {
                skip_space();
                if (peek() == ')') {
                    ++pos;
                    break;
                }
                if (peek() == '\0') throw parse_error("unbalanced parentheses", 1, pos);
                node->kids.push_back(parse_node());
            }
            if (node->kids.size() < 2) {
                throw parse_error("group with fewer than two children", 1, pos);
            }
            return node;
        }
        throw parse_error(std::string("unexpected character '") + c + "'", 1, pos + 1);
    }
};

int build_adjacency(const ParseNode& node, AdjTree& tree, std::vector<int>& seen) {
    if (node.taxon >= 0) {
        if (seen[node.taxon]++) {
            throw parse_error("taxon " + std::to_string(node.taxon + 1) + " appears twice");
        }
        return node.taxon;
    }
    const int id = tree.add_node();
    for (const auto& kid : node.kids) {
        tree.link(id, build_adjacency(*kid, tree, seen));
    }
    return id;
}

std::uint32_t subtree_info(const AdjTree& tree, int node, int parent,
                           std::vector<std::uint32_t>& masks) {
    std::uint32_t mask = 0;
    if (node < tree.n_taxa) {
        mask = 1u << node;
    } else {
        for (const int next : tree.adj[node]) {
            if (next == parent) continue;
            mask |= subtree_info(tree, next, node, masks);
        }
    }
    masks[node] = mask;
    return mask;
}

struct Rendered {
    std::string text;
    int min_taxon = 0;
};

Rendered render(const AdjTree& tree, int node, int parent) {
    if (node < tree.n_taxa) {
        return {std::string(1, static_cast<char>('1' + node)), node + 1};
    }
    std::vector<Rendered> kids;
    for (const int next : tree.adj[node]) {
        if (next == parent) continue;
        kids.push_back(render(tree, next, node));
    }
    std::sort(kids.begin(), kids.end(),
              [](const Rendered& a, const Rendered& b) { return a.min_taxon < b.min_taxon; });
    Rendered out;
    out.min_taxon = kids.front().min_taxon;
    out.text = "(";
    for (const auto& kid : kids) out.text += kid.text;
    out.text += ")";
    return out;
}

Topology topology_from_adjacency(AdjTree& tree, int outgroup) {
    const int og_leaf = outgroup - 1;
    if (tree.adj[og_leaf].size() != 1) {
        throw parse_error("outgroup leaf has unexpected degree");
    }
    const int root = tree.adj[og_leaf][0];

    Topology topo;
    topo.n_taxa = tree.n_taxa;
    topo.outgroup = outgroup;

    std::vector<std::uint32_t> masks(tree.adj.size(), 0);
    subtree_info(tree, root, -1, masks);
    for (std::size_t node = static_cast<std::size_t>(tree.n_taxa); node < tree.adj.size(); ++node) {
        if (static_cast<int>(node) == root) continue;
        if (tree.adj[node].empty()) continue; // spliced-out rooting artifact
        topo.splits.push_back(EdgePartition::from_mask(masks[node], tree.n_taxa, outgroup));
    }
    std::sort(topo.splits.begin(), topo.splits.end());

    // Display rooted at the outgroup's neighbor; the outgroup leaf itself
    // appears among the root children.
    std::vector<Rendered> kids;
    for (const int next : tree.adj[root]) kids.push_back(render(tree, next, root));
    std::sort(kids.begin(), kids.end(),
              [](const Rendered& a, const Rendered& b) { return a.min_taxon < b.min_taxon; });
    topo.text = "(";
    for (const auto& kid : kids) topo.text += kid.text;
    topo.text += ")";
    return topo;
}

long long checked_mul(long long a, long long b) {
    long long out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw numeric_error("region count overflows 64-bit integer");
    }
    return out;
}

} // namespace

std::string EdgePartition::display() const {
    std::string s(static_cast<std::size_t>(n_taxa), '-');
    for (int t = 0; t < n_taxa; ++t) {
        if (mask & (1u << t)) s[static_cast<std::size_t>(t)] = '+';
    }
    return s;
}

EdgePartition EdgePartition::from_mask(std::uint32_t mask, int n_taxa, int outgroup) {
    const std::uint32_t full = (n_taxa >= 32) ? ~0u : ((1u << n_taxa) - 1u);
    if (mask & (1u << (outgroup - 1))) mask = (~mask) & full;
    const int pc = std::popcount(mask);
    if (pc < 2 || pc > n_taxa - 2) {
        throw numeric_error("partition '" + EdgePartition{mask, n_taxa}.display() +
                            "' is not an internal edge");
    }
    return EdgePartition{mask, n_taxa};
}

Topology parse_topology(std::string_view text, int n_taxa, int outgroup) {
    if (n_taxa < 3 || n_taxa > 9) {
        throw config_error("parse_topology: N must be in [3,9] with single-digit labels");
    }
    if (outgroup == 0) outgroup = n_taxa;
    if (outgroup < 1 || outgroup > n_taxa) throw config_error("parse_topology: outgroup out of range");

    Parser parser{text, 0, n_taxa};
    auto root = parser.parse_node();
    parser.skip_space();
    if (parser.pos != text.size()) {
        throw parse_error("trailing characters after topology", 1, parser.pos + 1);
    }
    if (root->taxon >= 0) throw parse_error("topology must contain at least one group");

    AdjTree tree;
    tree.n_taxa = n_taxa;
    for (int i = 0; i < n_taxa; ++i) tree.add_node();
    std::vector<int> seen(static_cast<std::size_t>(n_taxa), 0);
    const int root_id = build_adjacency(*root, tree, seen);
    for (int t = 0; t < n_taxa; ++t) {
        if (!seen[t]) throw parse_error("taxon " + std::to_string(t + 1) + " missing");
    }
    // A two-child outer group is an artifact of rooting on an edge; splice it.
    if (tree.adj[root_id].size() == 2) {
        const int a = tree.adj[root_id][0];
        const int b = tree.adj[root_id][1];
        std::erase(tree.adj[a], root_id);
        std::erase(tree.adj[b], root_id);
        tree.adj[root_id].clear();
        tree.link(a, b);
    }
    return topology_from_adjacency(tree, outgroup);
}

std::vector<Topology> parse_topology_file(std::istream& is, int n_taxa, int outgroup) {
    std::vector<Topology> trees;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        try {
            trees.push_back(parse_topology(line, n_taxa, outgroup));
        } catch (const parse_error& e) {
            throw parse_error(std::string(e.what()), lineno);
        }
    }
    if (trees.empty()) throw parse_error("no topologies found", lineno);
    return trees;
}

EdgeAssociation associate(const std::vector<Topology>& trees) {
    EdgeAssociation assoc;
    std::map<EdgePartition, std::size_t> index;
    for (std::size_t ti = 0; ti < trees.size(); ++ti) {
        for (const auto& split : trees[ti].splits) {
            auto [it, inserted] = index.try_emplace(split, assoc.edges.size());
            if (inserted) {
                assoc.edges.push_back(split);
                assoc.members.emplace_back();
            }
            assoc.members[it->second].push_back(ti);
        }
    }
    return assoc;
}

RegionCounts region_counts(int n_taxa, RegionTarget target, TestMode mode) {
    if (n_taxa < 4) throw config_error("region_counts: N must be >= 4");
    RegionCounts rc;
    if (target == RegionTarget::tree) {
        // (2N-5)!! = 3 * 5 * ... * (2N-5)
        long long k = 1;
        for (int odd = 3; odd <= 2 * n_taxa - 5; odd += 2) k = checked_mul(k, odd);
        rc.k_all = k;
        rc.k_select = 1;
    } else {
        if (n_taxa > 60) throw numeric_error("region_counts: edge count overflows 64-bit integer");
        rc.k_all = (1LL << (n_taxa - 1)) - (n_taxa + 1);
        rc.k_select = n_taxa - 3;
    }
    if (mode == TestMode::outside) rc.k_select = rc.k_all - rc.k_select;
    rc.k_true = rc.k_all - rc.k_select;
    return rc;
}

std::vector<Topology> enumerate_topologies(int n_taxa, int outgroup) {
    if (n_taxa < 4 || n_taxa > 8) {
        throw config_error("enumerate_topologies: N must be in [4,8]");
    }
    if (outgroup == 0) outgroup = n_taxa;

    // Grow trees by inserting the next taxon into every existing edge.
    using EdgeList = std::vector<std::pair<int, int>>;
    std::vector<EdgeList> trees;
    trees.push_back({{0, n_taxa}, {1, n_taxa}, {2, n_taxa}});
    int next_internal = n_taxa + 1;
    for (int taxon = 3; taxon < n_taxa; ++taxon, ++next_internal) {
        std::vector<EdgeList> grown;
        grown.reserve(trees.size() * (2 * static_cast<std::size_t>(taxon) - 3));
        for (const auto& tree : trees) {
            for (std::size_t e = 0; e < tree.size(); ++e) {
                EdgeList t2;
                t2.reserve(tree.size() + 2);
                for (std::size_t f = 0; f < tree.size(); ++f) {
                    if (f == e) continue;
                    t2.push_back(tree[f]);
                }
                t2.emplace_back(tree[e].first, next_internal);
                t2.emplace_back(tree[e].second, next_internal);
                t2.emplace_back(taxon, next_internal);
                grown.push_back(std::move(t2));
            }
        }
        trees = std::move(grown);
    }

    std::vector<Topology> out;
    out.reserve(trees.size());
    for (const auto& edges : trees) {
        AdjTree tree;
        tree.n_taxa = n_taxa;
        int max_node = 0;
        for (const auto& [a, b] : edges) max_node = std::max({max_node, a, b});
        for (int i = 0; i <= max_node; ++i) tree.add_node();
        for (const auto& [a, b] : edges) tree.link(a, b);
        out.push_back(topology_from_adjacency(tree, outgroup));
    }
    std::sort(out.begin(), out.end(),
              [](const Topology& a, const Topology& b) { return a.text < b.text; });
    return out;
}

} // namespace msboot
