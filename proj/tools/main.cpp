#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wgnn/expressivity.hpp"
#include "wgnn/harness.hpp"
#include "wgnn/serialize.hpp"

namespace {

using wgnn::Rng;

nlohmann::json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw wgnn::ConfigError("cannot open config file '" + path + "'");
    return nlohmann::json::parse(is);
}

int cmd_scenario(const std::string& problem, int K, int N, double snr_db, int n,
                 std::uint64_t seed, const std::string& params_path, const std::string& out) {
    wgnn::Dataset ds;
    if (problem == "pr") {
        ds = wgnn::generate_dataset_pr(N, K, snr_db, n, seed);
    } else {
        wgnn::ScenarioParams params;
        if (!params_path.empty()) params = wgnn::scenario_params_from_json(load_json(params_path));
        params.K = K;
        ds = wgnn::generate_dataset_ls(wgnn::problem_from(problem), params, n, seed);
    }
    wgnn::save_dataset(out, ds);
    std::cout << "wrote " << ds.size() << " " << problem << " samples to " << out << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& dataset_path,
              const std::string& out_dir, std::uint64_t seed, bool seed_given) {
    const nlohmann::json spec = load_json(config_path);
    wgnn::TrainConfig cfg;
    cfg.gnn = wgnn::gnn_config_from_json(spec.at("gnn"));
    if (spec.contains("n_samples")) cfg.n_samples = spec.at("n_samples").get<int>();
    if (spec.contains("n_val")) cfg.n_val = spec.at("n_val").get<int>();
    if (spec.contains("batch_size")) cfg.batch_size = spec.at("batch_size").get<int>();
    if (spec.contains("epochs")) cfg.epochs = spec.at("epochs").get<int>();
    if (spec.contains("learning_rate")) cfg.learning_rate = spec.at("learning_rate").get<double>();
    if (spec.contains("patience")) cfg.patience = spec.at("patience").get<int>();
    if (spec.contains("eval_every")) cfg.eval_every = spec.at("eval_every").get<int>();
    if (spec.contains("baseline")) cfg.baseline = spec.at("baseline").get<std::string>();
    if (spec.contains("seed")) cfg.seed = spec.at("seed").get<std::uint64_t>();
    if (seed_given) cfg.seed = seed;
    if (spec.contains("normalization"))
        cfg.normalization = spec.at("normalization").get<std::string>();

    const wgnn::Dataset ds = wgnn::load_dataset(dataset_path);
    if (spec.contains("loss")) {
        const auto& l = spec.at("loss");
        cfg.loss.problem = l.contains("problem")
                               ? wgnn::problem_from(l.at("problem").get<std::string>())
                               : ds.problem;
        if (l.contains("w1")) cfg.loss.w1 = l.at("w1").get<double>();
        if (l.contains("w2")) cfg.loss.w2 = l.at("w2").get<double>();
    } else {
        cfg.loss = wgnn::LossConfig::defaults(ds.problem);
    }
    const wgnn::TrainResult result = wgnn::train(cfg, ds);
    std::filesystem::create_directories(out_dir);
    const std::string ckpt = out_dir + "/model.bin";
    wgnn::save_checkpoint(ckpt, result.model);
    const std::string hist = out_dir + "/history.csv";
    std::ofstream hf(hist);
    hf << "epoch,train_loss,val_ratio\n";
    for (const auto& e : result.history) {
        hf << e.epoch << ',' << e.train_loss << ',' << e.val_ratio << '\n';
    }
    std::cout << "best validation ratio " << result.best_val_ratio << " after "
              << result.epochs_run << " epochs; checkpoint " << ckpt << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& dataset_path,
             const std::string& baseline, int begin, int end, const std::string& out) {
    const wgnn::GnnModel model = wgnn::load_checkpoint(ckpt_path);
    const wgnn::Dataset ds = wgnn::load_dataset(dataset_path);
    if (end <= 0 || end > ds.size()) end = ds.size();
    const wgnn::EvalResult res =
        wgnn::evaluate(model, ds, begin, end, wgnn::baseline_from(baseline));
    std::cout << "sum rate ratio vs " << res.baseline << ": " << res.sum_rate_ratio << " over "
              << res.n_runs << " samples\n";
    if (!out.empty()) {
        std::ofstream of(out);
        of << "sample,rate_learned,rate_baseline\n";
        for (int i = 0; i < res.n_runs; ++i) {
            of << begin + i << ',' << res.rates_learned[i] << ',' << res.rates_baseline[i]
               << '\n';
        }
    }
    return 0;
}

int cmd_pairs(const std::string& problem, int K, int N, int n, double delta,
              const std::string& mode, std::uint64_t seed, const std::string& out) {
    std::ofstream of(out);
    of << "pair,max_residual,degenerate\n";
    const wgnn::PairScaleMode m = mode == "relative"   ? wgnn::PairScaleMode::relative
                                  : mode == "polytope" ? wgnn::PairScaleMode::polytope
                                                       : wgnn::PairScaleMode::absolute;
    for (int t = 0; t < n; ++t) {
        const std::uint64_t s = Rng::derive(seed, t);
        if (problem == "pr") {
            const auto H = wgnn::gen_rayleigh_H(N, K, s);
            const auto pair = wgnn::gen_pair_p(H, delta, Rng::derive(s, 2));
            const auto v = wgnn::verify_pair(pair);
            of << t << ',' << v.max_residual << ',' << v.degenerate << '\n';
        } else {
            wgnn::ScenarioParams params;
            params.K = K;
            const auto sc = wgnn::gen_d2d_scenario(params, s);
            const auto a = wgnn::gen_channel_matrix(sc, params, Rng::derive(s, 1));
            const auto pair = wgnn::gen_pair_ls(a, delta, Rng::derive(s, 2), m);
            const auto v = wgnn::verify_pair(pair);
            of << t << ',' << v.max_residual << ',' << v.degenerate << '\n';
        }
    }
    std::cout << "wrote " << n << " verified pairs to " << out << "\n";
    return 0;
}

int cmd_prob(const std::string& problem, const std::vector<int>& Ks, int N,
             const std::vector<double>& sweeps, int trials, std::uint64_t seed,
             const std::string& config_path, const std::string& out) {
    wgnn::ProbeConfig cfg;
    cfg.n_trials = trials;
    wgnn::ScenarioParams base;
    if (!config_path.empty()) {
        const nlohmann::json j = load_json(config_path);
        if (j.contains("n_trials")) cfg.n_trials = j.at("n_trials").get<int>();
        if (j.contains("equality_threshold"))
            cfg.equality_threshold = j.at("equality_threshold").get<double>();
        if (j.contains("epsilon_grid"))
            cfg.epsilon_grid = j.at("epsilon_grid").get<std::vector<double>>();
        if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
        if (j.contains("delta_mode")) {
            const std::string m = j.at("delta_mode").get<std::string>();
            cfg.delta_mode = m == "relative"   ? wgnn::PairScaleMode::relative
                             : m == "polytope" ? wgnn::PairScaleMode::polytope
                                               : wgnn::PairScaleMode::absolute;
        }
        if (j.contains("params")) base = wgnn::scenario_params_from_json(j.at("params"));
    }
    std::ofstream of(out);
    of << wgnn::probe_report_csv_header() << "\n";
    for (int K : Ks) {
        for (double sweep : sweeps) {
            const auto report = wgnn::prob_equal_solutions(
                problem, K, N, sweep, base, cfg, Rng::derive(seed, K * 1000 + (int)sweep));
            of << wgnn::probe_report_to_csv(report);
            for (const auto& p : report.points) {
                std::cout << problem << " K=" << p.K << " sweep=" << p.power_or_snr
                          << " eps=" << p.epsilon << " -> " << p.probability << " ["
                          << p.ci_lo << ", " << p.ci_hi << "]\n";
            }
        }
    }
    std::cout << "wrote probe sweep to " << out << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path, int N, int K) {
    const wgnn::GnnConfig cfg = wgnn::gnn_config_from_json(load_json(config_path).at("gnn"));
    const wgnn::DimReport report = wgnn::validate_dims(cfg, N, K);
    for (const auto& c : report.checks) {
        std::cout << (c.pass ? "[pass] " : "[FAIL] ") << "layer " << c.layer << ": "
                  << c.condition << " (" << c.lhs << " vs " << c.rhs << ", margin " << c.margin
                  << ")\n";
    }
    std::cout << (report.pass ? "dimension conditions satisfied\n"
                              : "dimension conditions violated\n");
    return report.pass ? 0 : 1;
}

int cmd_report(const std::string& in, const std::string& out_dir) {
    std::ifstream rf(in);
    if (!rf) throw wgnn::ConfigError("cannot open results csv '" + in + "'");
    std::filesystem::create_directories(out_dir);
    std::string line;
    std::getline(rf, line);
    std::map<std::string, std::vector<double>> groups;
    while (std::getline(rf, line)) {
        std::stringstream ss(line);
        std::string id, hash, name, seed, metric, value;
        std::getline(ss, id, ',');
        std::getline(ss, hash, ',');
        std::getline(ss, name, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, metric, ',');
        std::getline(ss, value, ',');
        if (!value.empty()) groups[name + "," + metric].push_back(std::stod(value));
    }
    std::ofstream sf(out_dir + "/summary.csv");
    sf << "config_name,metric,mean,std,n\n";
    for (const auto& [key, vals] : groups) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= vals.size();
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var = vals.size() > 1 ? var / (vals.size() - 1) : 0.0;
        sf << key << ',' << mean << ',' << std::sqrt(var) << ',' << vals.size() << '\n';
    }
    std::cout << "wrote " << out_dir << "/summary.csv\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vertex/Edge GNN laboratory for wireless resource allocation"};
    app.require_subcommand(1);

    std::string problem = "ls", config_path, dataset_path, ckpt_path, params_path;
    std::string out = "out.bin", out_dir = "out", baseline = "exhaustive", mode = "absolute";
    std::string results_in;
    int K = 10, N = 4, n = 100, trials = 500, begin = 0, end = 0;
    double snr_db = 10.0, delta = 0.3;
    std::vector<int> Ks = {3};
    std::vector<double> sweeps = {40.0};
    std::uint64_t seed = 1;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed)->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--problem", problem)->check(CLI::IsMember({"ls", "pc", "pr"}));
    };

    auto* scenario = app.add_subcommand("scenario", "generate a dataset");
    add_common(scenario);
    scenario->add_option("--K", K);
    scenario->add_option("--N", N);
    scenario->add_option("--snr", snr_db);
    scenario->add_option("--n", n);
    scenario->add_option("--params", params_path);
    scenario->add_option("--out", out)->required();

    auto* train = app.add_subcommand("train", "train a GNN on a dataset");
    add_common(train);
    train->add_option("--config", config_path)->required();
    train->add_option("--dataset", dataset_path)->required();
    train->add_option("--out", out_dir)->required();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a baseline");
    add_common(eval);
    eval->add_option("--checkpoint", ckpt_path)->required();
    eval->add_option("--dataset", dataset_path)->required();
    eval->add_option("--baseline", baseline)
        ->check(CLI::IsMember({"exhaustive", "fp_ls", "wmmse_pc", "wmmse_precoding"}));
    eval->add_option("--begin", begin);
    eval->add_option("--end", end);
    eval->add_option("--out", out)->default_val("");

    auto* pairs = app.add_subcommand("pairs", "emit constrained channel pairs");
    add_common(pairs);
    pairs->add_option("--K", K);
    pairs->add_option("--N", N);
    pairs->add_option("--n", n);
    pairs->add_option("--delta", delta);
    pairs->add_option("--mode", mode)->check(CLI::IsMember({"absolute", "relative", "polytope"}));
    pairs->add_option("--out", out)->required();

    auto* prob = app.add_subcommand("prob", "solution-collision probability sweeps");
    add_common(prob);
    prob->add_option("--config", config_path);
    prob->add_option("--K", Ks);
    prob->add_option("--N", N);
    prob->add_option("--sweep", sweeps, "transmit power dBm (ls/pc) or SNR dB (pr)");
    prob->add_option("--trials", trials);
    prob->add_option("--out", out)->required();

    auto* validate = app.add_subcommand("validate", "check precoding dimension conditions");
    add_common(validate);
    validate->add_option("--config", config_path)->required();
    validate->add_option("--N", N)->required();
    validate->add_option("--K", K)->required();

    auto* experiment = app.add_subcommand("experiment", "run a declared config x seed grid");
    add_common(experiment);
    experiment->add_option("--config", config_path)->required();
    experiment->add_option("--out", out_dir)->required();

    auto* report = app.add_subcommand("report", "summarize a results CSV");
    add_common(report);
    report->add_option("--in", results_in)->required();
    report->add_option("--out", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (scenario->parsed())
            return cmd_scenario(problem, K, N, snr_db, n, seed, params_path, out);
        if (train->parsed())
            return cmd_train(config_path, dataset_path, out_dir, seed, seed_given);
        if (eval->parsed()) return cmd_eval(ckpt_path, dataset_path, baseline, begin, end, out);
        if (pairs->parsed()) return cmd_pairs(problem, K, N, n, delta, mode, seed, out);
        if (prob->parsed()) return cmd_prob(problem, Ks, N, sweeps, trials, seed, config_path, out);
        if (validate->parsed()) return cmd_validate(config_path, N, K);
        if (experiment->parsed()) {
            const auto outcome = wgnn::run_experiment(config_path, out_dir);
            std::cout << "ran " << outcome.cells_run << " cells, skipped "
                      << outcome.cells_skipped << "; results " << outcome.results_csv << "\n";
            return 0;
        }
        if (report->parsed()) return cmd_report(results_in, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
