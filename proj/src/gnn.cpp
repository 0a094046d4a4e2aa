#include "wgnn/gnn.hpp"

#include <cmath>
#include <functional>

#include "wgnn/rng.hpp"

namespace wgnn {

namespace {

// Row index of ordered pair (i, j), i != j, in the diagonal-free layout.
int off_index(int K, int i, int j) { return i * (K - 1) + (j < i ? j : j - 1); }

struct RoleMeta {
    std::string name;
    int src_state = 0;
    int fdim = 0;
};

struct UpdateMeta {
    std::string name;
    int state = 0;
    int combiner_slot = 0;  // 0 = main, 1 = sig, 2 = int
    std::vector<RoleMeta> roles;
};

struct VariantMeta {
    int num_states = 1;
    std::vector<UpdateMeta> updates;
    int action_state = 0;  // ignored when has_readout
    bool has_readout = false;
    int readout_out = 0;
    int readout_fdim = 0;  // extra feature columns fed to the read-out
};

VariantMeta variant_meta(const GnnConfig& c) {
    VariantMeta m;
    const bool vertex = c.family == GnnFamily::vertex;
    switch (c.graph_kind) {
        case GraphKind::ls_het:
            if (vertex) {
                m.num_states = 2;  // 0 = tx, 1 = rx
                m.updates = {{"tx", 0, 0, {{"RS", 1, 1}, {"RI", 1, 1}}},
                             {"rx", 1, 0, {{"TS", 0, 1}, {"TI", 0, 1}}}};
            } else {
                m.num_states = 2;  // 0 = sig edges, 1 = int edges
                m.updates = {
                    {"sig", 0, 1, {{"T", 1, 0}, {"R", 1, 0}}},
                    {"int", 1, 2, {{"ST", 0, 0}, {"IT", 1, 0}, {"SR", 0, 0}, {"IR", 1, 0}}}};
            }
            m.action_state = 0;
            break;
        case GraphKind::ls_undir:
            if (vertex) {
                m.num_states = 1;
                m.updates = {{"v", 0, 0, {{"out", 0, 1}, {"in", 0, 1}}}};
                m.action_state = 0;
            } else {
                m.num_states = 1;
                m.updates = {{"e", 0, 0,
                              {{"tail_out", 0, 1},
                               {"tail_in", 0, 1},
                               {"head_out", 0, 1},
                               {"head_in", 0, 1}}}};
                m.has_readout = true;
                m.readout_out = 1;
            }
            break;
        case GraphKind::p_het:
            if (vertex) {
                m.num_states = 2;  // 0 = antennas, 1 = users
                m.updates = {{"ant", 0, 0, {{"AU", 1, 2}}}, {"usr", 1, 0, {{"UA", 0, 2}}}};
                m.has_readout = true;
                m.readout_out = 2;
                if (c.readout.kind == ReadoutKind::fnn_with_h) m.readout_fdim = 2;
            } else {
                m.num_states = 1;
                m.updates = {{"e", 0, 0, {{"A", 0, 0}, {"U", 0, 0}}}};
                m.action_state = 0;
            }
            break;
    }
    return m;
}

const CombinerConfig& resolved_combiner(const GnnConfig& c, int slot) {
    if (slot == 1 && c.combiner_sig) return *c.combiner_sig;
    if (slot == 2 && c.combiner_int) return *c.combiner_int;
    return c.combiner;
}

void enumerate_mlp(const std::string& prefix, int in_dim, const std::vector<int>& hidden,
                   int out_dim,
                   const std::function<void(const std::string&, const std::vector<int>&)>& fn) {
    int d = in_dim;
    int li = 0;
    for (int h : hidden) {
        fn(prefix + ".W" + std::to_string(li), {d, h});
        fn(prefix + ".b" + std::to_string(li), {h});
        d = h;
        ++li;
    }
    fn(prefix + ".W" + std::to_string(li), {d, out_dim});
    fn(prefix + ".b" + std::to_string(li), {out_dim});
}

// ---- execution plan: gather lists, pooling segments, feature tensors ----

struct RolePlan {
    RoleMeta meta;
    std::shared_ptr<std::vector<int>> gather;
    Tensor features;  // rank-2 (rows, fdim) when the role has features
    // rows per target, uniform and target-major in every variant
    int rows_per_target = 1;
    std::shared_ptr<Segments> segments;  // per-role target -> rows
};

struct UpdatePlan {
    UpdateMeta meta;
    std::vector<RolePlan> roles;
    std::shared_ptr<Segments> segments;  // union of the role blocks, for max pooling
};

struct Plan {
    VariantMeta meta;
    std::vector<Tensor> init;
    std::vector<UpdatePlan> updates;
    std::shared_ptr<std::vector<int>> read_gather_a, read_gather_b;
    std::shared_ptr<Segments> read_seg_out, read_seg_in;
    Tensor read_features;
    int N = 0, K = 0;
};

std::vector<double> ls_feature_matrix(const Graph& g) {
    const int K = g.K;
    std::vector<double> f(static_cast<std::size_t>(K) * K, 0.0);
    if (g.kind == GraphKind::ls_het) {
        for (const auto& e : g.edges)
            f[static_cast<std::size_t>(e.i) * K + (e.j - K)] = e.feature[0];
    } else {
        for (const auto& v : g.vertices)
            f[static_cast<std::size_t>(v.id) * K + v.id] = v.feature[0];
        for (const auto& e : g.edges) f[static_cast<std::size_t>(e.i) * K + e.j] = e.feature[0];
    }
    return f;
}

Tensor column(std::vector<double> v) {
    const int n = static_cast<int>(v.size());
    return Tensor({n, 1}, std::move(v));
}

std::shared_ptr<std::vector<int>> idx(std::vector<int> v) {
    return std::make_shared<std::vector<int>>(std::move(v));
}

/// Target-major uniform blocks: target t owns rows [t*c, (t+1)*c).
std::shared_ptr<Segments> uniform_segments(int targets, int rows_per_target) {
    auto seg = std::make_shared<Segments>();
    seg->groups.resize(targets);
    for (int t = 0; t < targets; ++t)
        for (int c = 0; c < rows_per_target; ++c)
            seg->groups[t].push_back(t * rows_per_target + c);
    return seg;
}

void finalize_roles(UpdatePlan& up, int targets) {
    for (auto& role : up.roles) {
        const int rows = static_cast<int>(role.gather->size());
        role.rows_per_target = targets > 0 ? rows / targets : 0;
        role.segments = uniform_segments(targets, role.rows_per_target);
    }
}

Plan build_ls_plan(const GnnConfig& c, const Graph& g) {
    Plan plan;
    plan.meta = variant_meta(c);
    const int K = g.K;
    plan.K = K;
    const int R = K * (K - 1);
    const std::vector<double> F = ls_feature_matrix(g);
    auto fat = [&](int i, int j) { return F[static_cast<std::size_t>(i) * K + j]; };

    std::vector<double> diag(K), offr, offc;
    std::vector<int> other;  // neighbor j != i in target-major order
    for (int i = 0; i < K; ++i) diag[i] = fat(i, i);
    offr.reserve(R);
    offc.reserve(R);
    other.reserve(R);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            if (j == i) continue;
            offr.push_back(fat(i, j));
            offc.push_back(fat(j, i));
            other.push_back(j);
        }

    const bool vertex = c.family == GnnFamily::vertex;
    if (c.graph_kind == GraphKind::ls_het && vertex) {
        plan.init = {Tensor({K, 1}), Tensor({K, 1})};
        std::vector<int> ident(K);
        for (int i = 0; i < K; ++i) ident[i] = i;
        auto seg = std::make_shared<Segments>();
        seg->groups.resize(K);
        for (int i = 0; i < K; ++i) {
            seg->groups[i].push_back(i);
            for (int cix = 0; cix < K - 1; ++cix)
                seg->groups[i].push_back(K + i * (K - 1) + cix);
        }
        for (int u = 0; u < 2; ++u) {
            UpdatePlan up;
            up.meta = plan.meta.updates[u];
            up.roles = {{up.meta.roles[0], idx(ident), column(diag)},
                        {up.meta.roles[1], idx(other), column(u == 0 ? offr : offc)}};
            up.segments = seg;
            finalize_roles(up, K);
            plan.updates.push_back(std::move(up));
        }
        return plan;
    }

    if (c.graph_kind == GraphKind::ls_het) {  // edge family
        plan.init = {column(diag), column(offr)};
        std::vector<int> t_rows(R), r_rows(R);
        for (int i = 0; i < K; ++i) {
            int cix = 0;
            for (int k = 0; k < K; ++k) {
                if (k == i) continue;
                t_rows[i * (K - 1) + cix] = off_index(K, i, k);
                r_rows[i * (K - 1) + cix] = off_index(K, k, i);
                ++cix;
            }
        }
        auto sig_seg = std::make_shared<Segments>();
        sig_seg->groups.resize(K);
        for (int i = 0; i < K; ++i)
            for (int cix = 0; cix < K - 1; ++cix) {
                sig_seg->groups[i].push_back(i * (K - 1) + cix);
                sig_seg->groups[i].push_back(R + i * (K - 1) + cix);
            }
        UpdatePlan sig;
        sig.meta = plan.meta.updates[0];
        sig.roles = {{sig.meta.roles[0], idx(t_rows), Tensor()},
                     {sig.meta.roles[1], idx(r_rows), Tensor()}};
        sig.segments = sig_seg;
        finalize_roles(sig, K);
        plan.updates.push_back(std::move(sig));

        const int C = std::max(K - 2, 0);
        std::vector<int> st(R), sr(R), it_rows, ir_rows;
        it_rows.reserve(static_cast<std::size_t>(R) * C);
        ir_rows.reserve(static_cast<std::size_t>(R) * C);
        auto int_seg = std::make_shared<Segments>();
        int_seg->groups.resize(R);
        int t = 0;
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
                if (j == i) continue;
                st[t] = i;
                sr[t] = j;
                auto& grp = int_seg->groups[t];
                grp.push_back(t);                        // block ST
                grp.push_back(R + R * C + t);            // block SR
                for (int k = 0, cix = 0; k < K; ++k) {
                    if (k == i || k == j) continue;
                    it_rows.push_back(off_index(K, i, k));
                    ir_rows.push_back(off_index(K, k, j));
                    grp.push_back(R + t * C + cix);              // block IT
                    grp.push_back(2 * R + R * C + t * C + cix);  // block IR
                    ++cix;
                }
                ++t;
            }
        UpdatePlan intu;
        intu.meta = plan.meta.updates[1];
        intu.roles = {{intu.meta.roles[0], idx(st), Tensor()},
                      {intu.meta.roles[1], idx(it_rows), Tensor()},
                      {intu.meta.roles[2], idx(sr), Tensor()},
                      {intu.meta.roles[3], idx(ir_rows), Tensor()}};
        intu.segments = int_seg;
        finalize_roles(intu, R);
        plan.updates.push_back(std::move(intu));
        return plan;
    }

    if (vertex) {  // ls_undir vertex
        plan.init = {column(diag)};
        auto seg = std::make_shared<Segments>();
        seg->groups.resize(K);
        for (int i = 0; i < K; ++i)
            for (int cix = 0; cix < K - 1; ++cix) {
                seg->groups[i].push_back(i * (K - 1) + cix);
                seg->groups[i].push_back(R + i * (K - 1) + cix);
            }
        UpdatePlan up;
        up.meta = plan.meta.updates[0];
        up.roles = {{up.meta.roles[0], idx(other), column(offr)},
                    {up.meta.roles[1], idx(other), column(offc)}};
        up.segments = seg;
        finalize_roles(up, K);
        plan.updates.push_back(std::move(up));
        return plan;
    }

    // ls_undir edge family (Eq. over directed-pair representations with a
    // shared read-out across links)
    plan.init = {column(offr)};
    const int C = std::max(K - 2, 0);
    std::vector<int> tail_out, tail_in, head_out, head_in;
    std::vector<double> f_tail, f_head;
    tail_out.reserve(static_cast<std::size_t>(R) * C);
    tail_in.reserve(tail_out.capacity());
    head_out.reserve(tail_out.capacity());
    head_in.reserve(tail_out.capacity());
    f_tail.reserve(tail_out.capacity());
    f_head.reserve(tail_out.capacity());
    auto seg = std::make_shared<Segments>();
    seg->groups.resize(R);
    int t = 0;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            if (j == i) continue;
            auto& grp = seg->groups[t];
            for (int k = 0, cix = 0; k < K; ++k) {
                if (k == i || k == j) continue;
                tail_out.push_back(off_index(K, i, k));
                tail_in.push_back(off_index(K, k, i));
                head_out.push_back(off_index(K, j, k));
                head_in.push_back(off_index(K, k, j));
                f_tail.push_back(fat(i, i));
                f_head.push_back(fat(j, j));
                for (int b = 0; b < 4; ++b)
                    grp.push_back(b * R * C + t * C + cix);
                ++cix;
            }
            ++t;
        }
    UpdatePlan up;
    up.meta = plan.meta.updates[0];
    up.roles = {{up.meta.roles[0], idx(tail_out), column(f_tail)},
                {up.meta.roles[1], idx(tail_in), column(f_tail)},
                {up.meta.roles[2], idx(head_out), column(f_head)},
                {up.meta.roles[3], idx(head_in), column(f_head)}};
    up.segments = seg;
    finalize_roles(up, R);
    plan.updates.push_back(std::move(up));

    plan.read_seg_out = std::make_shared<Segments>();
    plan.read_seg_in = std::make_shared<Segments>();
    plan.read_seg_out->groups.resize(K);
    plan.read_seg_in->groups.resize(K);
    for (int i = 0; i < K; ++i)
        for (int k = 0; k < K; ++k) {
            if (k == i) continue;
            plan.read_seg_out->groups[i].push_back(off_index(K, i, k));
            plan.read_seg_in->groups[i].push_back(off_index(K, k, i));
        }
    return plan;
}

Plan build_p_plan(const GnnConfig& c, const Graph& g) {
    Plan plan;
    plan.meta = variant_meta(c);
    const int N = g.N, K = g.K;
    plan.N = N;
    plan.K = K;
    const int E = N * K;
    std::vector<double> fa(static_cast<std::size_t>(E) * 2), fu(static_cast<std::size_t>(E) * 2);
    for (const auto& e : g.edges) {
        const int n = e.i, k = e.j - N;
        fa[static_cast<std::size_t>(n * K + k) * 2] = e.feature[0];
        fa[static_cast<std::size_t>(n * K + k) * 2 + 1] = e.feature[1];
        fu[static_cast<std::size_t>(k * N + n) * 2] = e.feature[0];
        fu[static_cast<std::size_t>(k * N + n) * 2 + 1] = e.feature[1];
    }
    Tensor FA({E, 2}, std::move(fa));
    Tensor FU({E, 2}, std::move(fu));

    if (c.family == GnnFamily::vertex) {
        plan.init = {Tensor({N, 1}), Tensor({K, 1})};
        std::vector<int> au(E), ua(E);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < K; ++j) au[i * K + j] = j;
        for (int j = 0; j < K; ++j)
            for (int n = 0; n < N; ++n) ua[j * N + n] = n;
        auto seg_a = std::make_shared<Segments>();
        seg_a->groups.resize(N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < K; ++j) seg_a->groups[i].push_back(i * K + j);
        auto seg_u = std::make_shared<Segments>();
        seg_u->groups.resize(K);
        for (int j = 0; j < K; ++j)
            for (int n = 0; n < N; ++n) seg_u->groups[j].push_back(j * N + n);

        UpdatePlan ant;
        ant.meta = plan.meta.updates[0];
        ant.roles = {{ant.meta.roles[0], idx(au), FA}};
        ant.segments = seg_a;
        finalize_roles(ant, N);
        plan.updates.push_back(std::move(ant));
        UpdatePlan usr;
        usr.meta = plan.meta.updates[1];
        usr.roles = {{usr.meta.roles[0], idx(ua), FU}};
        usr.segments = seg_u;
        finalize_roles(usr, K);
        plan.updates.push_back(std::move(usr));

        std::vector<int> ra(E), rb(E);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < K; ++j) {
                ra[i * K + j] = i;
                rb[i * K + j] = j;
            }
        plan.read_gather_a = idx(ra);
        plan.read_gather_b = idx(rb);
        plan.read_features = FA;
        return plan;
    }

    // edge family: representations on every (antenna, user) edge
    Tensor init = FA;
    plan.init = {std::move(init)};
    std::vector<int> a_rows, u_rows;
    a_rows.reserve(static_cast<std::size_t>(E) * std::max(K - 1, 0));
    u_rows.reserve(static_cast<std::size_t>(E) * std::max(N - 1, 0));
    auto seg = std::make_shared<Segments>();
    seg->groups.resize(E);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < K; ++j) {
            const int t = i * K + j;
            auto& grp = seg->groups[t];
            for (int m = 0, cix = 0; m < K; ++m) {
                if (m == j) continue;
                a_rows.push_back(i * K + m);
                grp.push_back(t * (K - 1) + cix);
                ++cix;
            }
            for (int n = 0, cix = 0; n < N; ++n) {
                if (n == i) continue;
                u_rows.push_back(n * K + j);
                grp.push_back(E * (K - 1) + t * (N - 1) + cix);
                ++cix;
            }
        }
    UpdatePlan up;
    up.meta = plan.meta.updates[0];
    up.roles = {{up.meta.roles[0], idx(a_rows), Tensor()},
                {up.meta.roles[1], idx(u_rows), Tensor()}};
    up.segments = seg;
    finalize_roles(up, E);
    plan.updates.push_back(std::move(up));
    return plan;
}

Plan build_plan(const GnnConfig& c, const Graph& g) {
    if (g.kind != c.graph_kind) throw ConfigError("graph kind does not match GNN config");
    return (c.graph_kind == GraphKind::p_het) ? build_p_plan(c, g) : build_ls_plan(c, g);
}

// ---- tape-level building blocks ----

using ParamMap = std::map<std::string, NodeId>;

NodeId pnode(const ParamMap& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw ConfigError("missing weight tensor '" + name + "'");
    return it->second;
}

NodeId mlp(Tape& tape, const ParamMap& params, const std::string& prefix, NodeId in,
           const std::vector<int>& hidden, ActKind act) {
    NodeId h = in;
    int li = 0;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        h = tape.matmul(h, pnode(params, prefix + ".W" + std::to_string(li)));
        h = tape.add(h, pnode(params, prefix + ".b" + std::to_string(li)));
        h = tape.activation(h, act);
        ++li;
    }
    h = tape.matmul(h, pnode(params, prefix + ".W" + std::to_string(li)));
    return tape.add(h, pnode(params, prefix + ".b" + std::to_string(li)));
}

NodeId run_processor(Tape& tape, const ParamMap& params, const GnnConfig& c,
                     const std::string& prefix, NodeId reps, NodeId features, ActKind act) {
    if (c.processor.kind == ProcessorKind::linear) {
        NodeId z = tape.matmul(reps, pnode(params, prefix + ".Q"));
        if (features >= 0) {
            z = tape.add(z, tape.matmul(features, pnode(params, prefix + ".P")));
        }
        return z;
    }
    NodeId in = (features >= 0) ? tape.concat({reps, features}, 1) : reps;
    return mlp(tape, params, prefix + ".fnn", in, c.processor.hidden, act);
}

NodeId run_combiner(Tape& tape, const ParamMap& params, const CombinerConfig& cb,
                    const std::string& prefix, NodeId d_prev, NodeId agg, ActKind act,
                    bool final_identity) {
    if (cb.kind == CombinerKind::fnn) {
        return mlp(tape, params, prefix + ".fnn", tape.concat({d_prev, agg}, 1), cb.hidden, act);
    }
    NodeId pre = tape.add(tape.add(tape.matmul(d_prev, pnode(params, prefix + ".U")), agg),
                          pnode(params, prefix + ".b"));
    if (cb.kind == CombinerKind::linear || final_identity) return pre;
    return tape.activation(pre, act);
}

} // namespace

int GnnConfig::input_dim() const {
    return (graph_kind == GraphKind::p_het && family == GnnFamily::edge) ? 2 : 1;
}

int GnnConfig::rep_dim_in(int layer) const {
    return layer == 0 ? input_dim() : dims[layer - 1];
}

void GnnConfig::validate() const {
    if (L < 1) throw ConfigError("GnnConfig: L must be >= 1");
    if (static_cast<int>(dims.size()) != L) throw ConfigError("GnnConfig: dims must have L entries");
    for (int d : dims)
        if (d < 1) throw ConfigError("GnnConfig: dims must be positive");
    if (!agg_dims.empty()) {
        if (static_cast<int>(agg_dims.size()) != L)
            throw ConfigError("GnnConfig: agg_dims must be empty or have L entries");
        for (int d : agg_dims)
            if (d < 1) throw ConfigError("GnnConfig: agg_dims must be positive");
    }
    activation_from_name(activation);
    for (int h : processor.hidden)
        if (h < 1) throw ConfigError("GnnConfig: fnn hidden sizes must be positive");

    const bool het_edge = family == GnnFamily::edge && graph_kind == GraphKind::ls_het;
    if ((combiner_sig || combiner_int) && !het_edge) {
        throw ConfigError("combiner_sig/combiner_int apply only to the ls_het Edge-GNN");
    }
    auto check_cb = [&](const CombinerConfig& cb) {
        for (int h : cb.hidden)
            if (h < 1) throw ConfigError("GnnConfig: combiner hidden sizes must be positive");
        if (cb.kind != CombinerKind::fnn) {
            // The aggregate enters the combine with identity weight, so the
            // aggregation width must equal the layer width.
            for (int l = 0; l < L; ++l) {
                if (agg_dim(l) != dims[l]) {
                    throw ConfigError(
                        "GnnConfig: linear/affine combiners require agg_dims == dims");
                }
            }
        }
    };
    check_cb(combiner);
    if (combiner_sig) check_cb(*combiner_sig);
    if (combiner_int) check_cb(*combiner_int);

    const bool needs_readout =
        (family == GnnFamily::vertex && graph_kind == GraphKind::p_het) ||
        (family == GnnFamily::edge && graph_kind == GraphKind::ls_undir);
    if (needs_readout) {
        if (readout.kind == ReadoutKind::none) {
            throw ConfigError("GnnConfig: this variant requires a read-out layer");
        }
        if (readout.kind == ReadoutKind::fnn_with_h && graph_kind != GraphKind::p_het) {
            throw ConfigError("GnnConfig: fnn_with_h read-out applies to the precoding graph");
        }
    } else if (readout.kind != ReadoutKind::none) {
        throw ConfigError("GnnConfig: this variant takes no read-out layer");
    }

    if (!needs_readout) {
        const int want = (graph_kind == GraphKind::p_het) ? 2 : 1;
        if (dims.back() != want) {
            throw ConfigError("GnnConfig: final layer dim must be " + std::to_string(want) +
                              " for this variant");
        }
    }
}

GnnConfig vanilla_config(GnnFamily family, GraphKind kind, std::vector<int> dims,
                         const std::string& activation) {
    GnnConfig c;
    c.family = family;
    c.graph_kind = kind;
    c.L = static_cast<int>(dims.size());
    c.dims = std::move(dims);
    c.processor.kind = ProcessorKind::linear;
    c.combiner.kind = CombinerKind::affine_act;
    c.pooling = PoolMode::mean;
    c.activation = activation;
    if (family == GnnFamily::vertex && kind == GraphKind::p_het) {
        c.readout = {ReadoutKind::fnn, {64}};
    } else if (family == GnnFamily::edge && kind == GraphKind::ls_undir) {
        c.readout = {ReadoutKind::fnn, {16}};
    }
    return c;
}

void for_each_param(const GnnConfig& config,
                    const std::function<void(const std::string&, const std::vector<int>&)>& fn) {
    config.validate();
    const VariantMeta meta = variant_meta(config);
    for (int l = 0; l < config.L; ++l) {
        const int d_in = config.rep_dim_in(l);
        const int mq = config.agg_dim(l);
        const int d_out = config.dims[l];
        const std::string lp = "l" + std::to_string(l) + ".";
        for (const auto& u : meta.updates) {
            for (const auto& r : u.roles) {
                const std::string rp = lp + u.name + "." + r.name;
                if (config.processor.kind == ProcessorKind::linear) {
                    fn(rp + ".Q", {d_in, mq});
                    if (r.fdim > 0) fn(rp + ".P", {r.fdim, mq});
                } else {
                    enumerate_mlp(rp + ".fnn", d_in + r.fdim, config.processor.hidden, mq, fn);
                }
            }
            const CombinerConfig& cb = resolved_combiner(config, u.combiner_slot);
            const std::string cp = lp + u.name + ".cb";
            if (cb.kind == CombinerKind::fnn) {
                enumerate_mlp(cp + ".fnn", d_in + mq, cb.hidden, d_out, fn);
            } else {
                fn(cp + ".U", {d_in, d_out});
                fn(cp + ".b", {d_out});
            }
        }
    }
    if (meta.has_readout) {
        const int in = 2 * config.dims.back() + meta.readout_fdim;
        enumerate_mlp("read.fnn", in, config.readout.hidden, meta.readout_out, fn);
    }
}

GnnModel init_model(const GnnConfig& config, std::uint64_t seed, InitMode mode) {
    GnnModel model;
    model.config = config;
    Rng rng(Rng::derive(seed, 0x6e17));
    for_each_param(config, [&](const std::string& name, const std::vector<int>& shape) {
        Tensor t(shape);
        if (mode == InitMode::fan_uniform && shape.size() == 2) {
            const double a = std::sqrt(6.0 / (shape[0] + shape[1]));
            for (double& v : t.data()) v = rng.uniform(-a, a);
        }
        model.weights.emplace(name, std::move(t));
    });
    return model;
}

long param_count(const GnnConfig& config) {
    long n = 0;
    for_each_param(config, [&](const std::string&, const std::vector<int>& shape) {
        n += static_cast<long>(shape_numel(shape));
    });
    return n;
}

std::map<std::string, NodeId> insert_params(Tape& tape, const GnnModel& model,
                                            bool requires_grad) {
    std::map<std::string, NodeId> out;
    for_each_param(model.config, [&](const std::string& name, const std::vector<int>& shape) {
        auto it = model.weights.find(name);
        if (it == model.weights.end()) throw ConfigError("model missing weight '" + name + "'");
        if (it->second.shape() != shape) {
            throw DimensionError("weight '" + name + "' has wrong shape");
        }
        out.emplace(name, tape.input(it->second, requires_grad));
    });
    return out;
}

GnnForward gnn_forward(Tape& tape, const GnnConfig& config,
                       const std::map<std::string, NodeId>& params, const Graph& graph,
                       double p_max) {
    config.validate();
    const Plan plan = build_plan(config, graph);
    const ActKind act = activation_from_name(config.activation);

    std::vector<NodeId> states;
    for (const Tensor& t : plan.init) states.push_back(tape.constant(t));

    // Feature constants are shared across layers.
    std::vector<std::vector<NodeId>> feat_nodes(plan.updates.size());
    for (std::size_t u = 0; u < plan.updates.size(); ++u) {
        for (const auto& role : plan.updates[u].roles) {
            feat_nodes[u].push_back(role.features.rank() == 2 ? tape.constant(role.features)
                                                              : -1);
        }
    }

    for (int l = 0; l < config.L; ++l) {
        const std::string lp = "l" + std::to_string(l) + ".";
        std::vector<NodeId> next = states;
        for (std::size_t u = 0; u < plan.updates.size(); ++u) {
            const UpdatePlan& up = plan.updates[u];
            std::vector<NodeId> zs;
            for (std::size_t r = 0; r < up.roles.size(); ++r) {
                const RolePlan& role = up.roles[r];
                NodeId reps = tape.gather_rows(states[role.meta.src_state], role.gather);
                zs.push_back(run_processor(tape, params, config,
                                           lp + up.meta.name + "." + role.meta.name, reps,
                                           feat_nodes[u][r], act));
            }
            // Sum/mean pool within each typed role and add across roles
            // (mean normalizes per neighbor type); max pools the whole
            // neighborhood jointly, where both readings coincide.
            NodeId agg;
            if (config.pooling == PoolMode::max) {
                NodeId stacked = zs.size() == 1 ? zs[0] : tape.concat(zs, 0);
                agg = tape.segment_pool(stacked, config.pooling, up.segments);
            } else {
                agg = -1;
                for (std::size_t r = 0; r < up.roles.size(); ++r) {
                    NodeId pooled =
                        tape.segment_pool(zs[r], config.pooling, up.roles[r].segments);
                    agg = (agg < 0) ? pooled : tape.add(agg, pooled);
                }
            }
            const bool final_identity = (l == config.L - 1) && !plan.meta.has_readout &&
                                        up.meta.state == plan.meta.action_state;
            const CombinerConfig& cb = resolved_combiner(config, up.meta.combiner_slot);
            next[up.meta.state] = run_combiner(tape, params, cb, lp + up.meta.name + ".cb",
                                               states[up.meta.state], agg, act, final_identity);
        }
        states = std::move(next);
    }

    NodeId raw;
    if (plan.meta.has_readout) {
        if (config.graph_kind == GraphKind::p_het) {
            NodeId da = tape.gather_rows(states[0], plan.read_gather_a);
            NodeId du = tape.gather_rows(states[1], plan.read_gather_b);
            std::vector<NodeId> parts = {da, du};
            if (plan.meta.readout_fdim > 0) parts.push_back(tape.constant(plan.read_features));
            raw = mlp(tape, params, "read.fnn", tape.concat(parts, 1), config.readout.hidden, act);
        } else {
            NodeId so = tape.segment_pool(states[0], PoolMode::sum, plan.read_seg_out);
            NodeId si = tape.segment_pool(states[0], PoolMode::sum, plan.read_seg_in);
            raw = mlp(tape, params, "read.fnn", tape.concat({so, si}, 1), config.readout.hidden,
                      act);
        }
    } else {
        raw = states[plan.meta.action_state];
    }

    GnnForward out;
    out.raw_node = raw;
    out.raw = tape.value(raw);
    if (config.graph_kind == GraphKind::p_het) {
        // Scale the raw precoder so the power constraint holds with equality.
        NodeId tr = tape.sum(tape.square(raw), -1);
        NodeId log_scale = tape.scalar_mul(
            tape.sub(tape.log(tape.constant(Tensor::scalar(p_max))), tape.log(tr)), 0.5);
        out.output_node = tape.mul(raw, tape.exp(log_scale));
        Tensor v = tape.value(out.output_node);
        out.output = Tensor({plan.N, plan.K, 2}, v.data());
    } else {
        out.output_node = tape.activation(raw, ActKind::sigmoid);
        out.output = tape.value(out.output_node);
    }
    return out;
}

Tensor gnn_forward_value(const GnnModel& model, const Graph& graph, double p_max) {
    Tape tape;
    auto params = insert_params(tape, model, false);
    return gnn_forward(tape, model.config, params, graph, p_max).output;
}

Tensor gnn_forward_raw(const GnnModel& model, const Graph& graph) {
    Tape tape;
    auto params = insert_params(tape, model, false);
    return gnn_forward(tape, model.config, params, graph, 1.0).raw;
}

namespace {

void check_variant(const GnnModel& model, GnnFamily family, GraphKind kind) {
    if (model.config.family != family || model.config.graph_kind != kind) {
        throw ConfigError("model family/graph_kind does not match this forward");
    }
}

} // namespace

Tensor forward_vertex_ls_het(const GnnModel& model, const Graph& graph) {
    check_variant(model, GnnFamily::vertex, GraphKind::ls_het);
    return gnn_forward_value(model, graph);
}

Tensor forward_vertex_ls_undir(const GnnModel& model, const Graph& graph) {
    check_variant(model, GnnFamily::vertex, GraphKind::ls_undir);
    return gnn_forward_value(model, graph);
}

Tensor forward_edge_ls(const GnnModel& model, const Graph& graph) {
    if (model.config.family != GnnFamily::edge ||
        (model.config.graph_kind != GraphKind::ls_het &&
         model.config.graph_kind != GraphKind::ls_undir)) {
        throw ConfigError("forward_edge_ls requires an edge-family scheduling model");
    }
    return gnn_forward_value(model, graph);
}

Tensor forward_vertex_p_het(const GnnModel& model, const Graph& graph, double p_max) {
    check_variant(model, GnnFamily::vertex, GraphKind::p_het);
    return gnn_forward_value(model, graph, p_max);
}

Tensor forward_edge_p_het(const GnnModel& model, const Graph& graph, double p_max) {
    check_variant(model, GnnFamily::edge, GraphKind::p_het);
    return gnn_forward_value(model, graph, p_max);
}

DimReport validate_dims(const GnnConfig& config, int N, int K) {
    if (!config.is_precoding()) {
        throw ConfigError("validate_dims applies to precoding configurations");
    }
    config.validate();
    DimReport report;
    report.pass = true;
    auto add = [&](int layer, std::string cond, double lhs, double rhs) {
        DimCheck c;
        c.layer = layer;
        c.condition = std::move(cond);
        c.lhs = lhs;
        c.rhs = rhs;
        c.pass = lhs >= rhs;
        c.margin = lhs - rhs;
        report.pass = report.pass && c.pass;
        report.checks.push_back(std::move(c));
    };
    const double full = 2.0 * N * K;
    if (config.family == GnnFamily::vertex) {
        for (int l = 0; l < config.L; ++l) {
            add(l + 1, "N*M_A + K*M_U >= 2NK",
                static_cast<double>(N) * config.dims[l] + static_cast<double>(K) * config.dims[l],
                full);
            add(l + 1, "N*M_Aq + K*M_Uq >= 2NK",
                static_cast<double>(N) * config.agg_dim(l) +
                    static_cast<double>(K) * config.agg_dim(l),
                full);
        }
    } else {
        for (int l = 0; l < config.L - 1; ++l) {
            add(l + 1, "M_E >= 2", config.dims[l], 2.0);
        }
        for (int l = 0; l < config.L; ++l) {
            add(l + 1, "M_Eq >= 2", config.agg_dim(l), 2.0);
        }
        // Final layer carries the complex action itself.
        DimCheck c;
        c.layer = config.L;
        c.condition = "M_E(L) == 2";
        c.lhs = config.dims.back();
        c.rhs = 2.0;
        c.pass = config.dims.back() == 2;
        c.margin = c.lhs - c.rhs;
        report.pass = report.pass && c.pass;
        report.checks.push_back(std::move(c));
    }
    return report;
}

} // namespace wgnn
