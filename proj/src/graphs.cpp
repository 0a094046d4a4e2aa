#include "wgnn/graphs.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace wgnn {

void Graph::build_adjacency() {
    incident.assign(vertices.size(), {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
        incident[edges[e].i].push_back(static_cast<int>(e));
        incident[edges[e].j].push_back(static_cast<int>(e));
    }
}

void Graph::validate() const {
    const int nv = static_cast<int>(vertices.size());
    std::set<std::tuple<int, int, int>> seen;
    for (const auto& e : edges) {
        if (e.i < 0 || e.i >= nv || e.j < 0 || e.j >= nv) {
            throw DimensionError("graph edge endpoint out of range");
        }
        if (!seen.insert({e.i, e.j, e.type}).second) {
            throw ContractError("duplicate (i, j, type) edge");
        }
    }
}

Graph build_g_ls_het(const ChannelMatrix& alpha, GnnFamily family) {
    if (static_cast<std::size_t>(alpha.K) * alpha.K != alpha.gains.size()) {
        throw DimensionError("build_g_ls_het: alpha must be square");
    }
    const int K = alpha.K;
    Graph g;
    g.kind = GraphKind::ls_het;
    g.K = K;
    g.action_site = (family == GnnFamily::vertex) ? ActionSite::vertex_tx : ActionSite::edge_sig;
    g.vertices.reserve(2 * K);
    for (int i = 0; i < K; ++i) g.vertices.push_back({i, tag::tx, {}});
    for (int j = 0; j < K; ++j) g.vertices.push_back({K + j, tag::rx, {}});
    g.edges.reserve(static_cast<std::size_t>(K) * K);
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            GraphEdge e;
            e.i = i;
            e.j = K + j;
            e.type = (i == j) ? tag::sig : tag::interf;
            e.feature = {alpha.at(i, j)};
            g.edges.push_back(std::move(e));
        }
    }
    g.build_adjacency();
    return g;
}

Graph build_g_ls_undir(const ChannelMatrix& alpha, GnnFamily /*update_site*/) {
    if (static_cast<std::size_t>(alpha.K) * alpha.K != alpha.gains.size()) {
        throw DimensionError("build_g_ls_undir: alpha must be square");
    }
    const int K = alpha.K;
    Graph g;
    g.kind = GraphKind::ls_undir;
    g.K = K;
    g.action_site = ActionSite::vertex_d;
    g.vertices.reserve(K);
    for (int i = 0; i < K; ++i) g.vertices.push_back({i, tag::d2d, {alpha.at(i, i)}});
    g.edges.reserve(static_cast<std::size_t>(K) * (K - 1));
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            if (i == j) continue;
            GraphEdge e;
            e.i = i;
            e.j = j;
            // Direction becomes type information in the undirected view.
            e.type = (i < j) ? tag::dir_lo_hi : tag::dir_hi_lo;
            e.feature = {alpha.at(i, j)};
            g.edges.push_back(std::move(e));
        }
    }
    g.build_adjacency();
    return g;
}

Graph build_g_p_het(const ComplexChannelMatrix& H) {
    H.validate();
    const int N = H.N, K = H.K;
    Graph g;
    g.kind = GraphKind::p_het;
    g.N = N;
    g.K = K;
    g.action_site = ActionSite::edge_all;
    g.vertices.reserve(N + K);
    for (int n = 0; n < N; ++n) g.vertices.push_back({n, tag::antenna, {}});
    for (int k = 0; k < K; ++k) g.vertices.push_back({N + k, tag::user, {}});
    g.edges.reserve(static_cast<std::size_t>(N) * K);
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            GraphEdge e;
            e.i = n;
            e.j = N + k;
            e.type = tag::beam;
            e.feature = {H.real(n, k), H.imag(n, k)};
            g.edges.push_back(std::move(e));
        }
    }
    g.build_adjacency();
    return g;
}

bool Permutation::is_valid() const {
    std::vector<char> seen(order.size(), 0);
    for (int v : order) {
        if (v < 0 || v >= size() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

Permutation Permutation::inverse() const {
    Permutation inv;
    inv.order.resize(order.size());
    for (int i = 0; i < size(); ++i) inv.order[order[i]] = i;
    return inv;
}

Permutation Permutation::compose(const Permutation& then) const {
    if (then.size() != size()) throw DimensionError("permutation size mismatch");
    Permutation out;
    out.order.resize(order.size());
    for (int i = 0; i < size(); ++i) out.order[i] = order[then.order[i]];
    return out;
}

Permutation Permutation::identity(int n) {
    Permutation p;
    p.order.resize(n);
    for (int i = 0; i < n; ++i) p.order[i] = i;
    return p;
}

Permutation Permutation::random(int n, Rng& rng) {
    Permutation p = identity(n);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
        std::swap(p.order[i], p.order[j]);
    }
    return p;
}

ChannelMatrix permute_joint(const ChannelMatrix& alpha, const Permutation& p) {
    if (p.size() != alpha.K || !p.is_valid()) {
        throw DimensionError("permute_joint: invalid permutation");
    }
    ChannelMatrix out(alpha.K);
    for (int i = 0; i < alpha.K; ++i)
        for (int j = 0; j < alpha.K; ++j) out.at(i, j) = alpha.at(p.order[i], p.order[j]);
    return out;
}

ComplexChannelMatrix permute_2d(const ComplexChannelMatrix& H, const Permutation& p1,
                                const Permutation& p2) {
    if (p1.size() != H.N || p2.size() != H.K || !p1.is_valid() || !p2.is_valid()) {
        throw DimensionError("permute_2d: invalid permutation");
    }
    ComplexChannelMatrix out(H.N, H.K);
    for (int n = 0; n < H.N; ++n)
        for (int k = 0; k < H.K; ++k) {
            out.real(n, k) = H.real(p1.order[n], p2.order[k]);
            out.imag(n, k) = H.imag(p1.order[n], p2.order[k]);
        }
    return out;
}

namespace {

Graph relabel(const Graph& g, const std::vector<int>& new_id_of_old) {
    Graph out = g;
    for (auto& v : out.vertices) v.id = new_id_of_old[v.id];
    std::sort(out.vertices.begin(), out.vertices.end(),
              [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
    for (auto& e : out.edges) {
        e.i = new_id_of_old[e.i];
        e.j = new_id_of_old[e.j];
    }
    out.build_adjacency();
    return out;
}

} // namespace

Graph permute_graph(const Graph& g, const Permutation& p) {
    if (g.kind == GraphKind::p_het) {
        throw DimensionError("permute_graph: precoding graphs need (p1, p2)");
    }
    if (p.size() != g.K || !p.is_valid()) {
        throw DimensionError("permute_graph: invalid permutation");
    }
    const Permutation inv = p.inverse();  // old link i moves to new position inv[i]
    std::vector<int> map(g.vertices.size());
    if (g.kind == GraphKind::ls_het) {
        for (int i = 0; i < g.K; ++i) {
            map[i] = inv.order[i];
            map[g.K + i] = g.K + inv.order[i];
        }
    } else {
        for (int i = 0; i < g.K; ++i) map[i] = inv.order[i];
    }
    Graph out = relabel(g, map);
    if (g.kind == GraphKind::ls_undir) {
        // Direction tags are defined on the relabeled indices.
        for (auto& e : out.edges) e.type = (e.i < e.j) ? tag::dir_lo_hi : tag::dir_hi_lo;
    }
    return out;
}

Graph permute_graph(const Graph& g, const Permutation& p_antenna, const Permutation& p_user) {
    if (g.kind != GraphKind::p_het) {
        throw DimensionError("permute_graph(p1, p2) is for precoding graphs");
    }
    if (p_antenna.size() != g.N || p_user.size() != g.K || !p_antenna.is_valid() ||
        !p_user.is_valid()) {
        throw DimensionError("permute_graph: invalid permutation");
    }
    const Permutation ia = p_antenna.inverse();
    const Permutation iu = p_user.inverse();
    std::vector<int> map(g.vertices.size());
    for (int n = 0; n < g.N; ++n) map[n] = ia.order[n];
    for (int k = 0; k < g.K; ++k) map[g.N + k] = g.N + iu.order[k];
    return relabel(g, map);
}

bool graph_equal(const Graph& a, const Graph& b) {
    if (a.kind != b.kind || a.K != b.K || a.N != b.N || a.action_site != b.action_site) {
        return false;
    }
    if (a.vertices.size() != b.vertices.size() || a.edges.size() != b.edges.size()) return false;
    for (std::size_t i = 0; i < a.vertices.size(); ++i) {
        const auto& va = a.vertices[i];
        const auto& vb = b.vertices[i];
        if (va.id != vb.id || va.type != vb.type || va.feature != vb.feature) return false;
    }
    auto key = [](const GraphEdge& e) { return std::make_tuple(e.i, e.j, e.type); };
    auto ea = a.edges;
    auto eb = b.edges;
    auto less = [&](const GraphEdge& x, const GraphEdge& y) { return key(x) < key(y); };
    std::sort(ea.begin(), ea.end(), less);
    std::sort(eb.begin(), eb.end(), less);
    for (std::size_t i = 0; i < ea.size(); ++i) {
        if (key(ea[i]) != key(eb[i]) || ea[i].feature != eb[i].feature) return false;
    }
    return true;
}

} // namespace wgnn
