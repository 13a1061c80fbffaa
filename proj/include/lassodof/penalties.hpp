#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lassodof/errors.hpp"
#include "lassodof/linalg.hpp"

namespace lassodof {

struct GraphEdges {
    Index node_count = 0;
    std::vector<std::pair<Index, Index>> edges;

    void validate() const
    {
        if (node_count < 1) throw InputError("graph needs at least one node");
        for (const auto& [a, b] : edges) {
            if (a < 0 || b < 0 || a >= node_count || b >= node_count) {
                throw InputError("edge endpoint out of range: (" + std::to_string(a) + ", " +
                                 std::to_string(b) + ")");
            }
            if (a == b) throw InputError("self-loop at node " + std::to_string(a));
        }
    }
};

inline DenseMatrix identity_penalty(Index p)
{
    if (p < 1) throw InputError("identity penalty needs p >= 1");
    return DenseMatrix::Identity(p, p);
}

/// First differences on a chain: row i is e_{i+1} - e_i.
inline DenseMatrix diff_1d(Index p)
{
    if (p < 2) throw InputError("first-difference penalty needs p >= 2");
    DenseMatrix D = DenseMatrix::Zero(p - 1, p);
    for (Index i = 0; i + 1 < p; ++i) {
        D(i, i) = -1.0;
        D(i, i + 1) = 1.0;
    }
    return D;
}

/// Edge incidence matrix; each row has -1 at the lower endpoint and +1 at the higher.
inline DenseMatrix graph_incidence(const GraphEdges& g)
{
    g.validate();
    DenseMatrix D = DenseMatrix::Zero(static_cast<Index>(g.edges.size()), g.node_count);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto [a, b] = g.edges[e];
        const Index lo = std::min(a, b), hi = std::max(a, b);
        D(static_cast<Index>(e), lo) = -1.0;
        D(static_cast<Index>(e), hi) = 1.0;
    }
    return D;
}

/**
 * Discrete difference operator of order k + 1 on p grid points,
 * built as diff_1d(p - k) * ... * diff_1d(p). Entries are integers
 * (no factorial scaling); the null space is the polynomials of degree <= k.
 *
 * k = 0 is accepted here and returns diff_1d(p).
 */
inline DenseMatrix difference_power(Index p, Index k)
{
    if (k < 0) throw InputError("difference order must be nonnegative");
    if (p < k + 2) {
        throw InputError("trend filtering of order " + std::to_string(k) + " needs p >= " +
                         std::to_string(k + 2));
    }
    DenseMatrix D = diff_1d(p);
    for (Index level = 1; level <= k; ++level) D = diff_1d(p - level) * D;
    return D;
}

inline DenseMatrix trend_filter_penalty(Index p, Index k)
{
    if (k < 1) throw InputError("trend filtering order must be >= 1");
    return difference_power(p, k);
}

} // namespace lassodof
