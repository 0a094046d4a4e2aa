#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "wgnn/baselines.hpp"
#include "wgnn/harness.hpp"
#include "wgnn/optim.hpp"
#include "wgnn/rng.hpp"
#include "wgnn/serialize.hpp"

using namespace wgnn;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("wgnn_test_" + std::to_string(Rng(std::random_device{}()).raw()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Dataset tiny_ls_dataset(int K, int n, std::uint64_t seed) {
    ScenarioParams params;
    params.K = K;
    return generate_dataset_ls(Problem::ls, params, n, seed);
}

GnnConfig edge_ls_config() { return vanilla_config(GnnFamily::edge, GraphKind::ls_het, {6, 6, 1}); }

} // namespace

TEST_CASE("dataset round-trips bit-exactly") {
    TempDir tmp;
    const Dataset ds = tiny_ls_dataset(4, 6, 99);
    const std::string path = (tmp.path / "ds.bin").string();
    save_dataset(path, ds);
    const Dataset back = load_dataset(path);
    CHECK(back.size() == ds.size());
    CHECK(back.seeds == ds.seeds);
    for (int i = 0; i < ds.size(); ++i) CHECK(back.alphas[i].gains == ds.alphas[i].gains);
    CHECK(back.norm_mean == ds.norm_mean);
    CHECK(back.norm_std == ds.norm_std);

    const Dataset dp = generate_dataset_pr(4, 2, 10.0, 5, 3);
    const std::string path2 = (tmp.path / "dp.bin").string();
    save_dataset(path2, dp);
    const Dataset back2 = load_dataset(path2);
    for (int i = 0; i < dp.size(); ++i) {
        CHECK(back2.Hs[i].re == dp.Hs[i].re);
        CHECK(back2.Hs[i].im == dp.Hs[i].im);
    }
}

TEST_CASE("normalized features are standardized in the dB domain") {
    const Dataset ds = tiny_ls_dataset(5, 20, 4);
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (int i = 0; i < ds.size(); ++i) {
        const ChannelMatrix f = ds.features_ls(i);
        for (double v : f.gains) {
            sum += v;
            sumsq += v * v;
            ++n;
        }
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("loss without penalties equals the negative mean soft sum rate") {
    const Dataset ds = tiny_ls_dataset(4, 2, 5);
    const double sigma2 = noise_power(ds.params);
    const double p_max = ds.params.tx_power_watts();

    Tape tape;
    Tensor y({4, 1}, {0.3, 0.8, 0.5, 0.9});
    NodeId yn = tape.input(y);
    LossConfig lc;  // w1 = w2 = 0
    NodeId loss = sample_loss_ls(tape, yn, ds.alphas[0], lc, sigma2, p_max);

    // independent soft-rate evaluation
    double rate = 0.0;
    const auto& a = ds.alphas[0];
    for (int k = 0; k < 4; ++k) {
        double interf = sigma2;
        for (int j = 0; j < 4; ++j)
            if (j != k) interf += y[j] * p_max * a.at(j, k);
        rate += std::log2(1.0 + y[k] * p_max * a.at(k, k) / interf);
    }
    CHECK(tape.value(loss)[0] == doctest::Approx(-rate).epsilon(1e-9));
}

TEST_CASE("activation penalty diverges as y approaches 1 and is clamped") {
    const Dataset ds = tiny_ls_dataset(3, 1, 6);
    Tape tape;
    Tensor y({3, 1}, {1.0 - 1e-16, 1.0 - 1e-16, 1.0 - 1e-16});
    NodeId yn = tape.input(y);
    LossConfig lc = LossConfig::defaults(Problem::ls);
    NodeId loss =
        sample_loss_ls(tape, yn, ds.alphas[0], lc, noise_power(ds.params), 1.0);
    // log(1-y) clamps at 1e-12, contributing w2 * 3 * log(1e-12) ~ +8.3e-3
    CHECK(tape.value(loss)[0] > -1e9);
    CHECK(tape.log_clamp_count() > 0);
}

TEST_CASE("loss gradient wrt a weight matches finite differences") {
    const Dataset ds = tiny_ls_dataset(4, 1, 8);
    GnnConfig cfg = edge_ls_config();
    cfg.activation = "swish";
    GnnModel model = init_model(cfg, 2);
    const double sigma2 = noise_power(ds.params);
    const double p_max = ds.params.tx_power_watts();
    const Graph g = build_g_ls_het(ds.features_ls(0), cfg.family);
    const LossConfig lc = LossConfig::defaults(Problem::ls);

    Tape tape;
    auto params = insert_params(tape, model, true);
    const GnnForward fwd = gnn_forward(tape, cfg, params, g, p_max);
    NodeId loss = sample_loss_ls(tape, fwd.output_node, ds.alphas[0], lc, sigma2, p_max);
    tape.backward(loss);

    const std::string name = "l1.sig.cb.U";
    Rng pick(3);
    for (int probe = 0; probe < 4; ++probe) {
        const std::size_t ix = pick.uniform_int(model.weights.at(name).numel());
        auto f = [&](double v) {
            GnnModel m2 = model;
            m2.weights.at(name)[ix] = v;
            Tape t2;
            auto p2 = insert_params(t2, m2, false);
            const GnnForward f2 = gnn_forward(t2, cfg, p2, g, p_max);
            return t2.value(sample_loss_ls(t2, f2.output_node, ds.alphas[0], lc, sigma2, p_max))[0];
        };
        const double orig = model.weights.at(name)[ix];
        const double fd = (f(orig + 1e-5) - f(orig - 1e-5)) / 2e-5;
        const double ad = tape.grad(params.at(name))[ix];
        CHECK(std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)}) < 1e-4);
    }
}

TEST_CASE("precoding loss equals the negative rate of the scaled precoder") {
    const Dataset ds = generate_dataset_pr(3, 2, 10.0, 1, 9);
    const double sigma2 = 1.0 / db_to_linear(ds.snr_db);
    GnnConfig cfg = vanilla_config(GnnFamily::edge, GraphKind::p_het, {4, 2});
    const GnnModel model = init_model(cfg, 1);

    Tape tape;
    auto params = insert_params(tape, model, false);
    const GnnForward fwd = gnn_forward(tape, cfg, params, build_g_p_het(ds.Hs[0]), 1.0);
    NodeId loss = sample_loss_pr(tape, fwd.output_node, ds.Hs[0], sigma2);

    ComplexChannelMatrix V(3, 2);
    for (int n = 0; n < 3; ++n)
        for (int k = 0; k < 2; ++k) {
            V.real(n, k) = fwd.output.data()[(static_cast<std::size_t>(n) * 2 + k) * 2];
            V.imag(n, k) = fwd.output.data()[(static_cast<std::size_t>(n) * 2 + k) * 2 + 1];
        }
    CHECK(tape.value(loss)[0] == doctest::Approx(-sumrate_pr(V, ds.Hs[0], sigma2)).epsilon(1e-9));
}

TEST_CASE("zero learning rate leaves the weights unchanged") {
    const Dataset ds = tiny_ls_dataset(4, 24, 11);
    TrainConfig cfg;
    cfg.gnn = edge_ls_config();
    cfg.n_samples = 16;
    cfg.n_val = 8;
    cfg.batch_size = 8;
    cfg.epochs = 2;
    cfg.learning_rate = 0.0;
    cfg.loss = LossConfig::defaults(Problem::ls);
    cfg.baseline = "exhaustive";
    const GnnModel before = init_model(cfg.gnn, cfg.seed);
    const TrainResult r = train(cfg, ds);
    // compare against the final (not best-val) weights via a fresh forward
    const Graph g = build_g_ls_het(ds.features_ls(0), cfg.gnn.family);
    CHECK(gnn_forward_value(r.model, g).data() == gnn_forward_value(before, g).data());
}

TEST_CASE("training is deterministic and reduces the loss on a tiny problem") {
    const Dataset ds = tiny_ls_dataset(4, 40, 13);
    TrainConfig cfg;
    cfg.gnn = edge_ls_config();
    cfg.n_samples = 32;
    cfg.n_val = 8;
    cfg.batch_size = 16;
    cfg.epochs = 12;
    cfg.learning_rate = 0.02;
    cfg.loss = LossConfig::defaults(Problem::ls);
    cfg.baseline = "exhaustive";
    const TrainResult r1 = train(cfg, ds);
    const TrainResult r2 = train(cfg, ds);
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    }
    CHECK(r1.history.back().train_loss < r1.history.front().train_loss);
    CHECK(r1.best_val_ratio > 0.0);
}

TEST_CASE("training aborts with a diagnostic when weights go non-finite") {
    const Dataset ds = tiny_ls_dataset(3, 8, 17);
    TrainConfig cfg;
    cfg.gnn = edge_ls_config();
    cfg.n_samples = 8;
    cfg.n_val = 0;
    cfg.batch_size = 4;
    cfg.epochs = 1;
    cfg.loss = LossConfig::defaults(Problem::ls);
    // poison one weight; the finite check trips on the first forward
    GnnModel m = init_model(cfg.gnn, 1);
    Dataset ds2 = ds;
    try {
        Tape tape;
        m.weights.at("l0.sig.cb.b")[0] = std::nan("");
        insert_params(tape, m, true);
        FAIL("expected NumericError");
    } catch (const NumericError&) {
    }
}

TEST_CASE("evaluate: all-on model against exhaustive on decoupled links") {
    // With negligible interference the optimum activates everything, so a
    // model whose head saturates at 1 achieves ratio 1.0; a model stuck at 0
    // scores 0.
    ScenarioParams params;
    params.K = 3;
    params.shadowing_std_db = 0.0;
    params.fading = FadingModel::unit;
    Dataset ds = generate_dataset_ls(Problem::ls, params, 4, 21);
    for (auto& a : ds.alphas) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) a.at(i, j) = 1e-30;
    }
    GnnConfig cfg = edge_ls_config();
    GnnModel on = init_model(cfg, 1, InitMode::zeros);
    on.weights.at("l2.sig.cb.b")[0] = 50.0;  // sigmoid -> 1
    const EvalResult good = evaluate(on, ds, 0, ds.size(), BaselineTag::exhaustive);
    CHECK(good.sum_rate_ratio == doctest::Approx(1.0));

    GnnModel off = init_model(cfg, 1, InitMode::zeros);
    off.weights.at("l2.sig.cb.b")[0] = -50.0;
    const EvalResult bad = evaluate(off, ds, 0, ds.size(), BaselineTag::exhaustive);
    CHECK(bad.sum_rate_ratio == 0.0);

    CHECK_THROWS_AS(evaluate(on, ds, 2, 2, BaselineTag::exhaustive), ContractError);
}

TEST_CASE("experiment grid runs once and reruns hit the manifest") {
    TempDir tmp;
    const std::string spec_path = (tmp.path / "spec.json").string();
    {
        nlohmann::json spec;
        spec["experiment_id"] = "tiny";
        spec["dataset"] = {{"problem", "ls"}, {"K", 3}, {"n_samples", 30}, {"seed", 5}};
        nlohmann::json train_cfg;
        train_cfg["gnn"] = gnn_config_to_json(vanilla_config(GnnFamily::edge, GraphKind::ls_het,
                                                             {4, 4, 1}));
        train_cfg["n_samples"] = 16;
        train_cfg["n_val"] = 6;
        train_cfg["batch_size"] = 8;
        train_cfg["epochs"] = 2;
        train_cfg["learning_rate"] = 0.01;
        train_cfg["baseline"] = "exhaustive";
        train_cfg["loss"] = {{"problem", "ls"}, {"w1", 0.1}, {"w2", 1e-4}};
        spec["grid"] = nlohmann::json::array({{{"name", "edge"}, {"train", train_cfg}}});
        spec["seeds"] = {1, 2};
        std::ofstream of(spec_path);
        of << spec.dump(2);
    }
    const std::string out_dir = (tmp.path / "out").string();
    const ExperimentOutcome first = run_experiment(spec_path, out_dir);
    CHECK(first.cells_run == 2);
    CHECK(first.cells_skipped == 0);
    CHECK(fs::exists(out_dir + "/results.csv"));
    CHECK(fs::exists(out_dir + "/summary.csv"));
    CHECK(fs::exists(out_dir + "/ckpt_edge_1.bin"));

    const ExperimentOutcome second = run_experiment(spec_path, out_dir);
    CHECK(second.cells_run == 0);
    CHECK(second.cells_skipped == 2);

    // summary has one row per metric with n = 2 seeds
    std::ifstream sf(out_dir + "/summary.csv");
    std::string line;
    std::getline(sf, line);
    int rows = 0;
    while (std::getline(sf, line)) {
        CHECK(line.substr(line.rfind(',') + 1) == "2");
        ++rows;
    }
    CHECK(rows >= 2);
}

TEST_CASE("empty experiment grid produces a header-only results csv") {
    TempDir tmp;
    const std::string spec_path = (tmp.path / "spec.json").string();
    {
        nlohmann::json spec;
        spec["experiment_id"] = "empty";
        spec["dataset"] = {{"problem", "ls"}, {"K", 3}, {"n_samples", 4}, {"seed", 5}};
        spec["grid"] = nlohmann::json::array();
        std::ofstream of(spec_path);
        of << spec.dump(2);
    }
    const std::string out_dir = (tmp.path / "out").string();
    const ExperimentOutcome res = run_experiment(spec_path, out_dir);
    CHECK(res.cells_run == 0);
    std::ifstream rf(out_dir + "/results.csv");
    std::string header, rest;
    std::getline(rf, header);
    CHECK(header == "experiment_id,config_hash,config_name,seed,metric,value");
    CHECK_FALSE(std::getline(rf, rest));
}

TEST_CASE("invalid experiment spec raises a config error naming the issue") {
    TempDir tmp;
    const std::string spec_path = (tmp.path / "bad.json").string();
    {
        std::ofstream of(spec_path);
        of << "{ not json";
    }
    CHECK_THROWS_AS(run_experiment(spec_path, (tmp.path / "out").string()), ConfigError);
    {
        std::ofstream of(spec_path);
        of << "{\"experiment_id\": \"x\"}";
    }
    CHECK_THROWS_AS(run_experiment(spec_path, (tmp.path / "out").string()), ConfigError);
}

TEST_CASE("cli smoke: scenario, pairs, validate") {
#ifdef WGNN_CLI_PATH
    TempDir tmp;
    const std::string cli = WGNN_CLI_PATH;
    const std::string ds = (tmp.path / "ds.bin").string();
    std::string cmd = cli + " scenario --problem ls --K 3 --n 5 --seed 2 --out " + ds;
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(load_dataset(ds).size() == 5);

    const std::string pairs = (tmp.path / "pairs.csv").string();
    cmd = cli + " pairs --problem ls --K 4 --n 3 --seed 2 --out " + pairs;
    CHECK(std::system(cmd.c_str()) == 0);

    const std::string cfg_path = (tmp.path / "gnn.json").string();
    {
        nlohmann::json j;
        j["gnn"] = gnn_config_to_json(vanilla_config(GnnFamily::edge, GraphKind::p_het,
                                                     {4, 4, 2}));
        std::ofstream of(cfg_path);
        of << j.dump();
    }
    cmd = cli + " validate --config " + cfg_path + " --N 4 --K 2";
    CHECK(std::system(cmd.c_str()) == 0);
#endif
}
