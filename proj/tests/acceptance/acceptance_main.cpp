// Acceptance suite: one pass/fail line per criterion.
//
// Each criterion is self-contained and prints its key measurements; run all
// criteria with no arguments or a single one with --criterion N.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "wgnn/expressivity.hpp"
#include "wgnn/harness.hpp"
#include "wgnn/optim.hpp"
#include "wgnn/rng.hpp"
#include "wgnn/serialize.hpp"

using namespace wgnn;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct NamedConfig {
    std::string name;
    GnnConfig cfg;
};

// The expressivity suites run with mish: activations with linear regions act
// linearly between kink crossings, so even strong configurations collide
// exactly for a fraction of random weight draws.
GnnConfig base_ls(GnnFamily family, GraphKind kind) {
    return vanilla_config(family, kind, {8, 8, 1}, "mish");
}

GnnConfig base_p(GnnFamily family) {
    if (family == GnnFamily::edge)
        return vanilla_config(GnnFamily::edge, GraphKind::p_het, {8, 8, 2}, "mish");
    return vanilla_config(GnnFamily::vertex, GraphKind::p_het, {8, 8, 8}, "mish");
}

// Table of weak rows: linear-processor Vertex-GNNs with any combiner, and the
// heterogeneous scheduling Edge-GNN with a linear interference combiner.
std::vector<NamedConfig> weak_ls_configs() {
    std::vector<NamedConfig> out;
    {
        GnnConfig c = base_ls(GnnFamily::vertex, GraphKind::ls_het);
        out.push_back({"vertex_ls_het linear-proc affine-comb", c});
        c.combiner.kind = CombinerKind::linear;
        out.push_back({"vertex_ls_het linear-proc linear-comb", c});
        c.combiner = {CombinerKind::fnn, {16}};
        out.push_back({"vertex_ls_het linear-proc fnn-comb", c});
    }
    {
        GnnConfig c = base_ls(GnnFamily::vertex, GraphKind::ls_undir);
        out.push_back({"vertex_ls_undir linear-proc affine-comb", c});
        c.combiner = {CombinerKind::fnn, {16}};
        out.push_back({"vertex_ls_undir linear-proc fnn-comb", c});
    }
    {
        GnnConfig c = base_ls(GnnFamily::edge, GraphKind::ls_het);
        c.combiner_sig = CombinerConfig{CombinerKind::affine_act, {}};
        c.combiner_int = CombinerConfig{CombinerKind::linear, {}};
        out.push_back({"edge_ls_het CBsig-nonlinear CBint-linear", c});
    }
    return out;
}

std::vector<NamedConfig> weak_p_configs() {
    std::vector<NamedConfig> out;
    {
        GnnConfig c = base_p(GnnFamily::vertex);
        out.push_back({"vertex_p_het linear-proc affine-comb", c});
        c.combiner = {CombinerKind::fnn, {16}};
        out.push_back({"vertex_p_het linear-proc fnn-comb", c});
    }
    return out;
}

std::vector<NamedConfig> strong_ls_configs() {
    std::vector<NamedConfig> out;
    // Processor hidden width matches the representation width: a wider
    // hidden layer squeezed back to 8 contracts the pair gap at init.
    {
        GnnConfig c = base_ls(GnnFamily::vertex, GraphKind::ls_het);
        c.processor = {ProcessorKind::fnn, {16}};
        out.push_back({"vertex_ls_het fnn-proc affine-comb", c});
        c.combiner.kind = CombinerKind::linear;
        out.push_back({"vertex_ls_het fnn-proc linear-comb", c});
    }
    {
        GnnConfig c = base_ls(GnnFamily::vertex, GraphKind::ls_undir);
        c.processor = {ProcessorKind::fnn, {16}};
        out.push_back({"vertex_ls_undir fnn-proc affine-comb", c});
    }
    {
        GnnConfig c = base_ls(GnnFamily::edge, GraphKind::ls_het);
        out.push_back({"edge_ls_het vanilla", c});
        c.combiner_sig = CombinerConfig{CombinerKind::linear, {}};
        c.combiner_int = CombinerConfig{CombinerKind::affine_act, {}};
        out.push_back({"edge_ls_het CBsig-linear CBint-nonlinear", c});
    }
    out.push_back({"edge_ls_undir vanilla", base_ls(GnnFamily::edge, GraphKind::ls_undir)});
    return out;
}

std::vector<NamedConfig> strong_p_configs() {
    std::vector<NamedConfig> out;
    out.push_back({"edge_p_het vanilla", base_p(GnnFamily::edge)});
    {
        GnnConfig c = base_p(GnnFamily::vertex);
        c.processor = {ProcessorKind::fnn, {16}};
        out.push_back({"vertex_p_het fnn-proc", c});
    }
    {
        GnnConfig c = base_p(GnnFamily::vertex);
        c.readout = {ReadoutKind::fnn_with_h, {32}};
        out.push_back({"vertex_p_het channel-fed readout", c});
    }
    return out;
}

ChannelMatrix unit_scale_matrix(int K, std::uint64_t seed) {
    Rng rng(seed);
    ChannelMatrix a(K);
    for (double& g : a.gains) g = rng.uniform(0.5, 2.0);
    return a;
}

std::vector<PairConstraintLS> make_ls_pairs() {
    std::vector<PairConstraintLS> pairs;
    int t = 0;
    for (int K : {3, 5, 8}) {
        for (int i = 0; i < 7; ++i, ++t) {
            pairs.push_back(
                gen_pair_ls(unit_scale_matrix(K, Rng::derive(100, t)), 0.3, Rng::derive(200, t)));
        }
    }
    return pairs;  // 21 verified pairs across the K sweep
}

std::vector<PairConstraintP> make_p_pairs() {
    std::vector<PairConstraintP> pairs;
    int t = 0;
    for (auto [N, K] : std::vector<std::pair<int, int>>{{2, 2}, {4, 2}, {8, 4}}) {
        for (int i = 0; i < 7; ++i, ++t) {
            pairs.push_back(gen_pair_p(gen_rayleigh_H(N, K, Rng::derive(300, t)), 0.3,
                                       Rng::derive(400, t)));
        }
    }
    return pairs;
}

// ---- criterion 1: exact collisions for every weak configuration ----

bool criterion1(std::ostream& os) {
    Timer timer;
    const auto ls_pairs = make_ls_pairs();
    const auto p_pairs = make_p_pairs();
    bool ok = true;
    double worst = 0.0;
    const int draws = 100;
    for (const auto& [name, cfg0] : weak_ls_configs()) {
        for (PoolMode pool : {PoolMode::sum, PoolMode::mean}) {
            GnnConfig cfg = cfg0;
            cfg.pooling = pool;
            for (int d = 0; d < draws; ++d) {
                const GnnModel m = init_model(cfg, Rng::derive(17, d + 1));
                for (const auto& pair : ls_pairs) {
                    const CollisionResult r = collision_check(m, pair, 1e-6);
                    worst = std::max(worst, r.max_gap);
                    if (!r.collide) ok = false;
                }
            }
        }
        os << "    " << name << ": max gap so far " << worst << "\n";
    }
    for (const auto& [name, cfg0] : weak_p_configs()) {
        for (PoolMode pool : {PoolMode::sum, PoolMode::mean}) {
            GnnConfig cfg = cfg0;
            cfg.pooling = pool;
            for (int d = 0; d < draws; ++d) {
                const GnnModel m = init_model(cfg, Rng::derive(19, d + 1));
                for (const auto& pair : p_pairs) {
                    const CollisionResult r = collision_check(m, pair, 1e-6);
                    worst = std::max(worst, r.max_gap);
                    if (!r.collide) ok = false;
                }
            }
        }
        os << "    " << name << ": max gap so far " << worst << "\n";
    }
    const double elapsed = timer.seconds();
    os << "    worst collision gap " << worst << " (tolerance 1e-6), " << elapsed << " s\n";
    return ok && elapsed < 120.0;
}

// ---- criterion 2: strong configurations distinguish the same pairs ----

bool criterion2(std::ostream& os) {
    Timer timer;
    const auto ls_pairs = make_ls_pairs();
    const auto p_pairs = make_p_pairs();
    bool ok = true;
    const int draws = 100;
    auto run = [&](const NamedConfig& nc, bool precoding) {
        long hits = 0, total = 0;
        for (int d = 0; d < draws; ++d) {
            const GnnModel m = init_model(nc.cfg, Rng::derive(23, d + 1));
            if (precoding) {
                for (const auto& pair : p_pairs) {
                    hits += collision_check(m, pair, 1e-3).collide ? 0 : 1;
                    ++total;
                }
            } else {
                for (const auto& pair : ls_pairs) {
                    hits += collision_check(m, pair, 1e-3).collide ? 0 : 1;
                    ++total;
                }
            }
        }
        const double frac = static_cast<double>(hits) / total;
        os << "    " << nc.name << ": distinguishes " << 100.0 * frac << "% of cases\n";
        if (frac < 0.95) ok = false;
    };
    for (const auto& nc : strong_ls_configs()) run(nc, false);
    for (const auto& nc : strong_p_configs()) run(nc, true);
    const double elapsed = timer.seconds();
    os << "    " << elapsed << " s\n";
    return ok && elapsed < 120.0;
}

// ---- criterion 3: gradient checks across the configuration grid ----

bool criterion3(std::ostream& os) {
    Timer timer;
    bool ok = true;
    double worst = 0.0;
    const std::vector<std::pair<GnnFamily, GraphKind>> variants = {
        {GnnFamily::vertex, GraphKind::ls_het},   {GnnFamily::vertex, GraphKind::ls_undir},
        {GnnFamily::vertex, GraphKind::p_het},    {GnnFamily::edge, GraphKind::ls_het},
        {GnnFamily::edge, GraphKind::ls_undir},   {GnnFamily::edge, GraphKind::p_het},
    };
    int combos = 0;
    for (const auto& [family, kind] : variants) {
        for (ProcessorKind proc : {ProcessorKind::linear, ProcessorKind::fnn}) {
            for (CombinerKind comb :
                 {CombinerKind::linear, CombinerKind::affine_act, CombinerKind::fnn}) {
                for (PoolMode pool : {PoolMode::sum, PoolMode::mean, PoolMode::max}) {
                    GnnConfig cfg;
                    cfg.family = family;
                    cfg.graph_kind = kind;
                    cfg.L = 3;
                    const bool pr = kind == GraphKind::p_het;
                    const bool readout = (family == GnnFamily::vertex && pr) ||
                                         (family == GnnFamily::edge && kind == GraphKind::ls_undir);
                    cfg.dims = pr ? (family == GnnFamily::edge ? std::vector<int>{3, 3, 2}
                                                               : std::vector<int>{3, 3, 3})
                                  : (readout ? std::vector<int>{3, 3, 3}
                                             : std::vector<int>{3, 3, 1});
                    cfg.processor.kind = proc;
                    if (proc == ProcessorKind::fnn) cfg.processor.hidden = {6};
                    cfg.combiner.kind = comb;
                    if (comb == CombinerKind::fnn) cfg.combiner.hidden = {6};
                    cfg.pooling = pool;
                    cfg.activation = "swish";
                    if (readout) cfg.readout = {ReadoutKind::fnn, {6}};
                    ++combos;

                    for (int inst = 0; inst < 20; ++inst) {
                        const std::uint64_t s = Rng::derive(combos, inst);
                        GnnModel model = init_model(cfg, s);
                        Graph g;
                        if (pr) {
                            g = build_g_p_het(gen_rayleigh_H(3, 2, Rng::derive(s, 5)));
                        } else {
                            const ChannelMatrix a = unit_scale_matrix(3, Rng::derive(s, 6));
                            g = (kind == GraphKind::ls_het) ? build_g_ls_het(a, family)
                                                            : build_g_ls_undir(a, family);
                        }
                        Tape tape;
                        auto params = insert_params(tape, model, true);
                        const GnnForward fwd = gnn_forward(tape, cfg, params, g, 1.0);
                        tape.backward(tape.mean(fwd.output_node));
                        Rng pick(Rng::derive(s, 7));
                        for (const auto& [name, node] : params) {
                            const std::size_t ix =
                                pick.uniform_int(model.weights.at(name).numel());
                            auto f = [&](double v) {
                                GnnModel m2 = model;
                                m2.weights.at(name)[ix] = v;
                                Tape t2;
                                auto p2 = insert_params(t2, m2, false);
                                const GnnForward f2 = gnn_forward(t2, cfg, p2, g, 1.0);
                                return t2.value(t2.mean(f2.output_node))[0];
                            };
                            const double orig = model.weights.at(name)[ix];
                            const double fd = (f(orig + 1e-5) - f(orig - 1e-5)) / 2e-5;
                            const double ad =
                                tape.has_grad(node) ? tape.grad(node)[ix] : 0.0;
                            const double err =
                                std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
                            worst = std::max(worst, err);
                            if (err > 1e-4) ok = false;
                        }
                    }
                }
            }
        }
    }
    const double elapsed = timer.seconds();
    os << "    " << combos << " configurations, worst relative error " << worst << ", "
       << elapsed << " s\n";
    return ok && elapsed < 60.0;
}

// ---- criterion 4: permutation equivariance ----

bool criterion4(std::ostream& os) {
    Timer timer;
    bool ok = true;
    double worst = 0.0;
    Rng rng(404);
    const int n_perms = 50;

    std::vector<NamedConfig> ls = weak_ls_configs();
    for (auto& nc : strong_ls_configs()) ls.push_back(nc);
    const ChannelMatrix a = unit_scale_matrix(6, 991);
    for (const auto& [name, cfg] : ls) {
        const GnnModel m = init_model(cfg, 31);
        auto build = [&](const ChannelMatrix& mat) {
            return cfg.graph_kind == GraphKind::ls_het ? build_g_ls_het(mat, cfg.family)
                                                       : build_g_ls_undir(mat, cfg.family);
        };
        const Tensor out = gnn_forward_value(m, build(a));
        for (int t = 0; t < n_perms; ++t) {
            const Permutation p = Permutation::random(6, rng);
            const Tensor out_p = gnn_forward_value(m, build(permute_joint(a, p)));
            for (int i = 0; i < 6; ++i) {
                const double gap = std::abs(out_p[i] - out[p.order[i]]);
                worst = std::max(worst, gap);
                if (gap > 1e-6) ok = false;
            }
        }
    }

    std::vector<NamedConfig> pc = weak_p_configs();
    for (auto& nc : strong_p_configs()) pc.push_back(nc);
    const ComplexChannelMatrix H = gen_rayleigh_H(4, 3, 992);
    for (const auto& [name, cfg] : pc) {
        const GnnModel m = init_model(cfg, 37);
        const Tensor out = gnn_forward_value(m, build_g_p_het(H), 1.0);
        for (int t = 0; t < n_perms; ++t) {
            const Permutation p1 = Permutation::random(4, rng);
            const Permutation p2 = Permutation::random(3, rng);
            const Tensor out_p = gnn_forward_value(m, build_g_p_het(permute_2d(H, p1, p2)), 1.0);
            for (int n = 0; n < 4; ++n)
                for (int k = 0; k < 3; ++k)
                    for (int c = 0; c < 2; ++c) {
                        const std::size_t at = (static_cast<std::size_t>(n) * 3 + k) * 2 + c;
                        const std::size_t from =
                            (static_cast<std::size_t>(p1.order[n]) * 3 + p2.order[k]) * 2 + c;
                        const double gap = std::abs(out_p.data()[at] - out.data()[from]);
                        worst = std::max(worst, gap);
                        if (gap > 1e-6) ok = false;
                    }
        }
    }
    os << "    worst equivariance gap " << worst << " over " << n_perms
       << " permutations per configuration, " << timer.seconds() << " s\n";
    return ok;
}

// ---- criterion 5: solution-collision probability trends ----

bool criterion5(std::ostream& os) {
    Timer timer;
    bool ok = true;
    ScenarioParams base;
    ProbeConfig cfg;
    cfg.n_trials = 500;
    const std::vector<int> Ks = {3, 4, 5, 6};
    const std::vector<double> Ps = {0.0, 10.0, 20.0, 30.0, 40.0};
    std::map<std::pair<int, int>, ProbePoint> grid;
    for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
        for (std::size_t pi = 0; pi < Ps.size(); ++pi) {
            const ProbeReport r = prob_equal_ls(
                Ks[ki], Ps[pi], base, cfg, Rng::derive(505, ki * 100 + pi));
            grid[{static_cast<int>(ki), static_cast<int>(pi)}] = r.points[0];
        }
    }
    os << "    scheduling collision probability (rows K, cols P dBm):\n";
    for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
        os << "      K=" << Ks[ki] << ":";
        for (std::size_t pi = 0; pi < Ps.size(); ++pi) {
            os << " " << grid[{(int)ki, (int)pi}].probability;
        }
        os << "\n";
    }

    // Monotone trends on the Wilson-interval midpoints, tolerating a single
    // inversion per line when the intervals overlap.
    auto check_chain = [&](std::vector<ProbePoint> chain, const std::string& label) {
        int inversions = 0;
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
            const double mid_prev = 0.5 * (chain[i].ci_lo + chain[i].ci_hi);
            const double mid_next = 0.5 * (chain[i + 1].ci_lo + chain[i + 1].ci_hi);
            if (mid_next > mid_prev) {
                ++inversions;
                if (chain[i + 1].ci_lo > chain[i].ci_hi) {
                    os << "    significant inversion along " << label << "\n";
                    ok = false;
                }
            }
        }
        if (inversions > 1) {
            os << "    " << inversions << " inversions along " << label << "\n";
            ok = false;
        }
    };
    for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
        std::vector<ProbePoint> chain;
        for (std::size_t pi = 0; pi < Ps.size(); ++pi) chain.push_back(grid[{(int)ki, (int)pi}]);
        check_chain(chain, "P at K=" + std::to_string(Ks[ki]));
    }
    for (std::size_t pi = 0; pi < Ps.size(); ++pi) {
        std::vector<ProbePoint> chain;
        for (std::size_t ki = 0; ki < Ks.size(); ++ki) chain.push_back(grid[{(int)ki, (int)pi}]);
        check_chain(chain, "K at P=" + std::to_string(Ps[pi]));
    }

    const double p30 = grid[{0, 0}].probability;
    const double p640 = grid[{3, 4}].probability;
    os << "    P(K=3, 0 dBm) = " << p30 << ", P(K=6, 40 dBm) = " << p640 << "\n";
    if (!(p30 > 0.9)) {
        os << "    endpoint failure: P(K=3, 0 dBm) <= 0.9\n";
        ok = false;
    }
    if (!(p30 - p640 >= 0.3)) {
        os << "    endpoint failure: drop < 0.3\n";
        ok = false;
    }

    // Precoding at (4,2), SNR 10 dB: near-zero probability at eps = 0.01.
    ProbeConfig pcfg;
    pcfg.n_trials = 500;
    const ProbeReport pr = prob_equal_pr(4, 2, 10.0, pcfg, 515);
    double p_eps001 = 1.0;
    for (const auto& pt : pr.points) {
        os << "    precoding eps=" << pt.epsilon << ": " << pt.probability << "\n";
        if (pt.epsilon == 0.01) p_eps001 = pt.probability;
    }
    if (!(p_eps001 < 0.05)) {
        os << "    precoding probability at eps=0.01 not < 0.05\n";
        ok = false;
    }
    const double elapsed = timer.seconds();
    os << "    " << elapsed << " s\n";
    return ok && elapsed < 1200.0;
}

// ---- criteria 6/7/8 share the training helper ----

struct TrainOutcome {
    double test_ratio = 0.0;
    double best_val = 0.0;
    int epochs = 0;
};

TrainOutcome run_training(const Dataset& ds, const GnnConfig& gnn, double lr, int epochs,
                          int n_train, int n_val, const std::string& baseline,
                          std::uint64_t seed, Problem problem) {
    TrainConfig cfg;
    cfg.gnn = gnn;
    cfg.n_samples = n_train;
    cfg.n_val = n_val;
    cfg.batch_size = 64;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.seed = seed;
    cfg.patience = 25;
    cfg.eval_every = problem == Problem::pr ? 2 : 1;
    cfg.baseline = baseline;
    cfg.loss = LossConfig::defaults(problem);
    const TrainResult r = train(cfg, ds);
    TrainOutcome out;
    out.best_val = r.best_val_ratio;
    out.epochs = r.epochs_run;
    const int test_begin = cfg.n_samples + cfg.n_val;
    out.test_ratio =
        evaluate(r.model, ds, test_begin, ds.size(), baseline_from(baseline)).sum_rate_ratio;
    return out;
}

bool criterion6(std::ostream& os) {
    Timer timer;
    ScenarioParams params;
    params.K = 10;
    const Dataset ds = generate_dataset_ls(Problem::ls, params, 800, 606);

    GnnConfig edge = vanilla_config(GnnFamily::edge, GraphKind::ls_het, {8, 8, 8, 1});
    const TrainOutcome e =
        run_training(ds, edge, 0.01, 200, 500, 100, "exhaustive", 1, Problem::ls);
    os << "    vanilla Edge-GNN: test ratio " << e.test_ratio << " (val " << e.best_val
       << ", " << e.epochs << " epochs)\n";

    GnnConfig vertex = vanilla_config(GnnFamily::vertex, GraphKind::ls_het, {8, 8, 8, 1});
    const TrainOutcome v =
        run_training(ds, vertex, 0.003, 200, 500, 100, "exhaustive", 1, Problem::ls);
    os << "    vanilla Vertex-GNN: test ratio " << v.test_ratio << " (val " << v.best_val
       << ", " << v.epochs << " epochs)\n";

    GnnConfig fnnv = vertex;
    fnnv.processor = {ProcessorKind::fnn, {32}};
    const TrainOutcome f =
        run_training(ds, fnnv, 0.01, 200, 500, 100, "exhaustive", 1, Problem::ls);
    os << "    FNN-processor Vertex-GNN: test ratio " << f.test_ratio << " (val " << f.best_val
       << ", " << f.epochs << " epochs)\n";

    bool ok = true;
    if (!(e.test_ratio >= 0.95)) {
        os << "    edge ratio below 0.95\n";
        ok = false;
    }
    if (!(v.test_ratio <= e.test_ratio - 0.05)) {
        os << "    vertex ratio not at least 5 points below edge\n";
        ok = false;
    }
    if (!(f.test_ratio >= 0.95)) {
        os << "    fnn-processor vertex ratio below 0.95\n";
        ok = false;
    }
    const double elapsed = timer.seconds();
    os << "    " << elapsed << " s\n";
    return ok && elapsed < 2700.0;
}

bool criterion7(std::ostream& os) {
    Timer timer;
    const Dataset ds = generate_dataset_pr(4, 2, 10.0, 11000, 707);

    GnnConfig edge = vanilla_config(GnnFamily::edge, GraphKind::p_het, {16, 16, 16, 2});
    const TrainOutcome e =
        run_training(ds, edge, 0.01, 60, 10000, 500, "wmmse_precoding", 1, Problem::pr);
    os << "    vanilla Edge-GNN: test ratio " << e.test_ratio << " (val " << e.best_val << ", "
       << e.epochs << " epochs)\n";

    GnnConfig vertex = vanilla_config(GnnFamily::vertex, GraphKind::p_het, {16, 16, 16});
    vertex.readout = {ReadoutKind::fnn, {64}};
    const TrainOutcome v =
        run_training(ds, vertex, 0.003, 60, 10000, 500, "wmmse_precoding", 1, Problem::pr);
    os << "    vanilla Vertex-GNN: test ratio " << v.test_ratio << " (val " << v.best_val
       << ", " << v.epochs << " epochs)\n";

    GnnConfig fnnv = vertex;
    fnnv.processor = {ProcessorKind::fnn, {64}};
    fnnv.readout = {ReadoutKind::fnn_with_h, {64}};
    const TrainOutcome f =
        run_training(ds, fnnv, 0.003, 60, 10000, 500, "wmmse_precoding", 1, Problem::pr);
    os << "    FNN-processor Vertex-GNN (with H): test ratio " << f.test_ratio << " (val "
       << f.best_val << ", " << f.epochs << " epochs)\n";

    bool ok = true;
    if (!(e.test_ratio >= 0.90)) {
        os << "    edge ratio below 0.90\n";
        ok = false;
    }
    if (!(v.test_ratio <= 0.80)) {
        os << "    vanilla vertex ratio above 0.80\n";
        ok = false;
    }
    if (!(f.test_ratio >= 0.90)) {
        os << "    fnn-with-H vertex ratio below 0.90\n";
        ok = false;
    }
    const double elapsed = timer.seconds();
    os << "    " << elapsed << " s\n";
    return ok && elapsed < 3600.0;
}

bool criterion8(std::ostream& os) {
    Timer timer;
    bool ok = true;

    // Dimension bottleneck: interior width 1 vs 8 under identical budgets.
    const Dataset ds = generate_dataset_pr(4, 2, 10.0, 4600, 808);
    GnnConfig wide = vanilla_config(GnnFamily::edge, GraphKind::p_het, {8, 8, 8, 2});
    GnnConfig narrow = vanilla_config(GnnFamily::edge, GraphKind::p_het, {1, 1, 1, 2});
    const TrainOutcome w =
        run_training(ds, wide, 0.01, 40, 4000, 300, "wmmse_precoding", 1, Problem::pr);
    const TrainOutcome n =
        run_training(ds, narrow, 0.01, 40, 4000, 300, "wmmse_precoding", 1, Problem::pr);
    os << "    M_E=8 ratio " << w.test_ratio << ", M_E=1 ratio " << n.test_ratio << "\n";
    if (!(n.test_ratio <= w.test_ratio - 0.05)) {
        os << "    narrow model not at least 0.05 below wide model\n";
        ok = false;
    }

    // validate_dims thresholds quoted for (4,2) and the edge variant.
    const DimReport v3 = validate_dims(vanilla_config(GnnFamily::vertex, GraphKind::p_het,
                                                      {3, 3, 3}),
                                       4, 2);
    const DimReport v2 = validate_dims(vanilla_config(GnnFamily::vertex, GraphKind::p_het,
                                                      {2, 2, 2}),
                                       4, 2);
    const DimReport e2 = validate_dims(vanilla_config(GnnFamily::edge, GraphKind::p_het,
                                                      {2, 2, 2}),
                                       4, 2);
    const DimReport e1 = validate_dims(vanilla_config(GnnFamily::edge, GraphKind::p_het,
                                                      {1, 1, 2}),
                                       4, 2);
    os << "    vertex dims 3 pass=" << v3.pass << ", dims 2 pass=" << v2.pass
       << "; edge dims 2 pass=" << e2.pass << ", dims 1 pass=" << e1.pass << "\n";
    if (!v3.pass || v2.pass || !e2.pass || e1.pass) {
        os << "    validate_dims verdicts do not match the stated thresholds\n";
        ok = false;
    }
    os << "    " << timer.seconds() << " s\n";
    return ok;
}

bool criterion9(std::ostream& os) {
    Timer timer;
    bool ok = true;

    // WMMSE monotonicity, both variants, 100 instances each.
    int viol_pc = 0, viol_pr = 0;
    for (int t = 0; t < 100; ++t) {
        ScenarioParams p;
        p.K = 6;
        const D2dScenario sc = gen_d2d_scenario(p, Rng::derive(909, t));
        const ChannelMatrix a = gen_channel_matrix(sc, p, Rng::derive(910, t));
        const WmmsePcResult r = wmmse_pc(a, p.tx_power_watts(), noise_power(p));
        for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
            if (r.objective_trace[i] <
                r.objective_trace[i - 1] -
                    1e-8 * std::max(std::abs(r.objective_trace[i - 1]), 1.0)) {
                ++viol_pc;
            }
        }
        const ComplexChannelMatrix H = gen_rayleigh_H(4, 2, Rng::derive(911, t));
        const WmmsePrecodingResult q = wmmse_precoding(H, 1.0, 0.1);
        for (std::size_t i = 1; i < q.objective_trace.size(); ++i) {
            if (q.objective_trace[i] <
                q.objective_trace[i - 1] -
                    1e-8 * std::max(std::abs(q.objective_trace[i - 1]), 1.0)) {
                ++viol_pr;
            }
        }
    }
    os << "    monotonicity violations: power control " << viol_pc << ", precoding " << viol_pr
       << "\n";
    if (viol_pc > 0 || viol_pr > 0) ok = false;

    // Low-SNR precoding approaches per-user matched filters within 5 degrees.
    double worst_angle = 0.0;
    for (int t = 0; t < 50; ++t) {
        const ComplexChannelMatrix H = gen_rayleigh_H(4, 2, Rng::derive(912, t));
        const WmmsePrecodingResult r = wmmse_precoding(H, 1.0, 1e4);
        for (int k = 0; k < 2; ++k) {
            double re = 0.0, im = 0.0, hn = 0.0, vn = 0.0;
            for (int n = 0; n < 4; ++n) {
                const double hr = H.real(n, k), hi = H.imag(n, k);
                const double vr = r.precoder.V.real(n, k), vi = r.precoder.V.imag(n, k);
                re += hr * vr + hi * vi;
                im += hr * vi - hi * vr;
                hn += hr * hr + hi * hi;
                vn += vr * vr + vi * vi;
            }
            const double c = std::min(std::sqrt((re * re + im * im) / (hn * vn)), 1.0);
            worst_angle = std::max(worst_angle, std::acos(c) * 180.0 / M_PI);
        }
    }
    os << "    worst low-SNR angle to matched filter: " << worst_angle << " deg\n";
    if (worst_angle >= 5.0) ok = false;

    // FP scheduling within 5% of exhaustive search at K=6 over 200 instances.
    double fp_sum = 0.0, ex_sum = 0.0;
    for (int t = 0; t < 200; ++t) {
        ScenarioParams p;
        p.K = 6;
        const D2dScenario sc = gen_d2d_scenario(p, Rng::derive(913, t));
        const ChannelMatrix a = gen_channel_matrix(sc, p, Rng::derive(914, t));
        const std::vector<double> pw(6, p.tx_power_watts());
        const double sigma2 = noise_power(p);
        fp_sum += sumrate_ls(fp_ls(a, pw, sigma2).x, a, pw, sigma2);
        ex_sum += exhaustive_ls(a, pw, sigma2).rate;
    }
    os << "    fp_ls / exhaustive mean-rate ratio: " << fp_sum / ex_sum << "\n";
    if (!(fp_sum >= 0.95 * ex_sum)) ok = false;

    os << "    " << timer.seconds() << " s\n";
    return ok;
}

bool criterion10(std::ostream& os) {
    Timer timer;
    bool ok = true;
    namespace fs = std::filesystem;
    const fs::path tmp = fs::temp_directory_path() / "wgnn_acceptance_persist";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    // Checkpoint and dataset round-trips are bit-exact.
    GnnConfig cfg = vanilla_config(GnnFamily::edge, GraphKind::ls_het, {8, 8, 1});
    const GnnModel model = init_model(cfg, 99);
    const std::string ckpt = (tmp / "model.bin").string();
    save_checkpoint(ckpt, model);
    const GnnModel loaded = load_checkpoint(ckpt);
    for (const auto& [name, t] : model.weights) {
        if (std::memcmp(t.data().data(), loaded.weights.at(name).data().data(),
                        t.numel() * sizeof(double)) != 0) {
            os << "    checkpoint mismatch in " << name << "\n";
            ok = false;
        }
    }
    ScenarioParams params;
    params.K = 5;
    const Dataset ds = generate_dataset_ls(Problem::ls, params, 16, 4);
    const std::string dpath = (tmp / "data.bin").string();
    save_dataset(dpath, ds);
    const Dataset back = load_dataset(dpath);
    for (int i = 0; i < ds.size(); ++i) {
        if (std::memcmp(ds.alphas[i].gains.data(), back.alphas[i].gains.data(),
                        ds.alphas[i].gains.size() * sizeof(double)) != 0) {
            os << "    dataset mismatch at sample " << i << "\n";
            ok = false;
        }
    }
    os << "    round-trips bit-exact\n";

    // Completed grids are not recomputed.
    const std::string spec_path = (tmp / "spec.json").string();
    {
        nlohmann::json spec;
        spec["experiment_id"] = "persist";
        spec["dataset"] = {{"problem", "ls"}, {"K", 4}, {"n_samples", 40}, {"seed", 5}};
        nlohmann::json tc;
        tc["gnn"] = gnn_config_to_json(vanilla_config(GnnFamily::edge, GraphKind::ls_het,
                                                      {4, 4, 1}));
        tc["n_samples"] = 24;
        tc["n_val"] = 8;
        tc["batch_size"] = 8;
        tc["epochs"] = 3;
        tc["learning_rate"] = 0.01;
        tc["baseline"] = "exhaustive";
        tc["loss"] = {{"problem", "ls"}, {"w1", 0.1}, {"w2", 1e-4}};
        spec["grid"] = nlohmann::json::array({{{"name", "edge"}, {"train", tc}}});
        spec["seeds"] = {1, 2};
        std::ofstream of(spec_path);
        of << spec.dump();
    }
    const ExperimentOutcome first = run_experiment(spec_path, (tmp / "out").string());
    const ExperimentOutcome second = run_experiment(spec_path, (tmp / "out").string());
    os << "    first run: " << first.cells_run << " cells; rerun: " << second.cells_run
       << " cells, " << second.cells_skipped << " skipped\n";
    if (first.cells_run != 2 || second.cells_run != 0 || second.cells_skipped != 2) ok = false;

    fs::remove_all(tmp);
    os << "    " << timer.seconds() << " s\n";
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[i + 1]);
        }
    }
    const std::vector<std::pair<std::string, std::function<bool(std::ostream&)>>> criteria = {
        {"collision suite: weak configurations agree within 1e-6", criterion1},
        {"distinguishing suite: strong configurations differ in >= 95% of draws", criterion2},
        {"gradient checks across family/processor/combiner/pooling", criterion3},
        {"permutation equivariance within 1e-6", criterion4},
        {"solution-collision probability trends", criterion5},
        {"link scheduling training gap (K=10, 500 samples)", criterion6},
        {"precoding training gap (N=4, K=2, SNR 10 dB)", criterion7},
        {"dimension effect and validate_dims thresholds", criterion8},
        {"baseline sanity: WMMSE monotonicity, MRT limit, FP vs exhaustive", criterion9},
        {"persistence: bit-exact round-trips and manifest reruns", criterion10},
    };
    bool all_ok = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (only != 0 && only != id) continue;
        std::ostringstream detail;
        bool ok = false;
        try {
            ok = criteria[i].second(detail);
        } catch (const std::exception& e) {
            detail << "    exception: " << e.what() << "\n";
        }
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << ": "
                  << criteria[i].first << "\n"
                  << detail.str();
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
