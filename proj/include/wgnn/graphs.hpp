#ifndef WGNN_GRAPHS_HPP
#define WGNN_GRAPHS_HPP

#include <cstdint>
#include <vector>

#include "wgnn/channel.hpp"
#include "wgnn/rng.hpp"

namespace wgnn {

enum class GraphKind { ls_het, ls_undir, p_het };

/// Where the learned actions live on the graph.
enum class ActionSite { vertex_tx, edge_sig, vertex_d, edge_all };

struct Vertex {
    int id = 0;
    int type = 0;
    std::vector<double> feature;  // empty when the graph kind has no vertex features
};

struct GraphEdge {
    int i = 0, j = 0;  // endpoint vertex ids
    int type = 0;
    std::vector<double> feature;
};

/// Typed graph with features and action slots. Immutable after construction.
struct Graph {
    GraphKind kind = GraphKind::ls_het;
    int K = 0;  // D2D pairs, or users for p_het
    int N = 0;  // antennas (p_het only)
    ActionSite action_site = ActionSite::vertex_tx;
    std::vector<Vertex> vertices;
    std::vector<GraphEdge> edges;
    std::vector<std::vector<int>> incident;  // per-vertex incident edge indices

    void build_adjacency();
    /// Endpoints exist, no duplicate (i, j, type).
    void validate() const;
};

// Vertex/edge type tags per graph kind.
namespace tag {
inline constexpr int tx = 0, rx = 1;           // ls_het vertices
inline constexpr int sig = 0, interf = 1;      // ls_het edges
inline constexpr int d2d = 0;                  // ls_undir vertices
inline constexpr int dir_lo_hi = 0, dir_hi_lo = 1;  // ls_undir edges, by direction
inline constexpr int antenna = 0, user = 1;    // p_het vertices
inline constexpr int beam = 0;                 // p_het edges
} // namespace tag

enum class GnnFamily { vertex, edge };

/// Heterogeneous link-scheduling graph: tx/rx vertices without features,
/// K^2 edges typed sig (i = j) or int, edge (i, j) carries alpha_ij.
/// Actions sit on tx vertices for the vertex family, sig edges otherwise.
Graph build_g_ls_het(const ChannelMatrix& alpha, GnnFamily family = GnnFamily::vertex);

/// Converted homogeneous graph: K vertices D_i with feature alpha_ii and
/// K(K-1) direction-typed edges with feature alpha_ij. update_site records
/// which family the conversion targets; actions are on vertices either way.
Graph build_g_ls_undir(const ChannelMatrix& alpha, GnnFamily update_site);

/// Precoding graph: N antenna + K user vertices without features, NK edges
/// carrying (Re h_ij, Im h_ij); actions on edges.
Graph build_g_p_het(const ComplexChannelMatrix& H);

/// Bijection on {0..n-1}; order[i] is the old index placed at new position i.
struct Permutation {
    std::vector<int> order;

    int size() const { return static_cast<int>(order.size()); }
    bool is_valid() const;
    Permutation inverse() const;
    Permutation compose(const Permutation& then) const;

    static Permutation identity(int n);
    static Permutation random(int n, Rng& rng);
};

/// Joint relabeling of links: out[i][j] = alpha[p[i]][p[j]].
ChannelMatrix permute_joint(const ChannelMatrix& alpha, const Permutation& p);

/// Independent row/column relabeling: out[i][j] = H[p1[i]][p2[j]].
ComplexChannelMatrix permute_2d(const ComplexChannelMatrix& H, const Permutation& p1,
                                const Permutation& p2);

template <typename T>
std::vector<T> permute_vec(const std::vector<T>& v, const Permutation& p) {
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[p.order[i]];
    return out;
}

/// Relabels a scheduling graph by a joint link permutation.
Graph permute_graph(const Graph& g, const Permutation& p);

/// Relabels a precoding graph by independent antenna/user permutations.
Graph permute_graph(const Graph& g, const Permutation& p_antenna, const Permutation& p_user);

/// Structural equality up to edge ordering (features compared exactly).
bool graph_equal(const Graph& a, const Graph& b);

} // namespace wgnn

#endif
