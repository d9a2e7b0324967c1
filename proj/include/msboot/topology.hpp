#pragma once

#include "msboot/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace msboot {

// Taxon partition induced by an internal edge. Bit t-1 stands for taxon t;
// masks are normalized so the outgroup bit is clear (complemented if needed).
struct EdgePartition {
    std::uint32_t mask = 0;
    int n_taxa = 0;

    std::string display() const; // '+' for members, '-' otherwise
    static EdgePartition from_mask(std::uint32_t mask, int n_taxa, int outgroup);

    friend bool operator==(const EdgePartition&, const EdgePartition&) = default;
    friend auto operator<=>(const EdgePartition& a, const EdgePartition& b) {
        return a.mask <=> b.mask;
    }
};

// Unrooted tree topology over taxa 1..N in the nested-parenthesis notation,
// e.g. "(((1(23))4)56)". text is the canonical form: rooted for display at
// the internal node adjacent to the outgroup, children sorted by smallest
// contained taxon.
struct Topology {
    std::string text;
    int n_taxa = 0;
    int outgroup = 0;
    std::vector<EdgePartition> splits; // internal edges only, sorted by mask

    friend bool operator==(const Topology& a, const Topology& b) {
        return a.text == b.text && a.n_taxa == b.n_taxa && a.splits == b.splits;
    }
};

// Parses one topology string. outgroup = 0 selects the default (taxon N).
// Throws msboot::parse_error on malformed input.
Topology parse_topology(std::string_view text, int n_taxa, int outgroup = 0);

// One topology per line; line order defines tree indices.
std::vector<Topology> parse_topology_file(std::istream& is, int n_taxa, int outgroup = 0);

// Edge-to-tree association. Edges are numbered by first appearance while
// scanning trees in input order (within a tree, by ascending mask).
struct EdgeAssociation {
    std::vector<EdgePartition> edges;
    std::vector<std::vector<std::size_t>> members; // tree indices per edge
};

EdgeAssociation associate(const std::vector<Topology>& trees);

enum class RegionTarget { tree, edge };

struct RegionCounts {
    long long k_all = 0;
    long long k_select = 0;
    long long k_true = 0;
};

// Region bookkeeping for N >= 4 taxa:
//   trees: K_all = (2N-5)!/(2^(N-3) (N-3)!)   edges: K_all = 2^(N-1) - (N+1)
// K_select is 1 (tree) or N-3 (edge) in inside mode, the complement count in
// outside mode; K_true = K_all - K_select.
RegionCounts region_counts(int n_taxa, RegionTarget target, TestMode mode);

// All fully resolved unrooted topologies; guarded to N <= 8.
std::vector<Topology> enumerate_topologies(int n_taxa, int outgroup = 0);

} // namespace msboot
