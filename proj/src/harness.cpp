#include "wgnn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "wgnn/baselines.hpp"
#include "wgnn/optim.hpp"
#include "wgnn/rng.hpp"
#include "wgnn/serialize.hpp"

namespace wgnn {

namespace {

constexpr double kLog2 = 0.6931471805599453;

Tensor ones_column(int n) { return Tensor({n, 1}, std::vector<double>(n, 1.0)); }

} // namespace

NodeId sample_loss_ls(Tape& tape, NodeId y, const ChannelMatrix& alpha_raw,
                      const LossConfig& cfg, double sigma2, double p_max) {
    cfg.validate();
    if (sigma2 <= 0.0) throw DomainError("sample_loss_ls: noise power must be positive");
    const int K = alpha_raw.K;

    // Signal coefficients s_k = p_k a_kk and the zero-diagonal interference
    // map I = M y with M[k][j] = p_j a_jk (j != k).
    Tensor sig_coef({K, 1});
    Tensor interf_map({K, K});
    for (int k = 0; k < K; ++k) {
        sig_coef[k] = p_max * alpha_raw.at(k, k);
        for (int j = 0; j < K; ++j) {
            if (j != k) interf_map.at(k, j) = p_max * alpha_raw.at(j, k);
        }
    }
    NodeId s = tape.mul(y, tape.constant(sig_coef));
    NodeId interf = tape.add(tape.matmul(tape.constant(interf_map), y),
                             tape.constant(Tensor::scalar(sigma2)));
    // sum_k log2(1 + s_k / i_k) = (sum log(i + s) - sum log(i)) / ln 2,
    // with the soft activation y scaling the signal term as well.
    NodeId rate = tape.scalar_mul(
        tape.sub(tape.sum(tape.log(tape.add(interf, s))), tape.sum(tape.log(interf))),
        1.0 / kLog2);

    NodeId loss = tape.scalar_mul(rate, -1.0);
    if (cfg.w1 > 0.0) {
        loss = tape.sub(loss, tape.scalar_mul(tape.sum(tape.log(y)), cfg.w1));
    }
    if (cfg.w2 > 0.0) {
        NodeId one_minus = tape.sub(tape.constant(ones_column(K)), y);
        loss = tape.sub(loss, tape.scalar_mul(tape.sum(tape.log(one_minus)), cfg.w2));
    }
    return loss;
}

NodeId sample_loss_pr(Tape& tape, NodeId v, const ComplexChannelMatrix& H_raw, double sigma2) {
    if (sigma2 <= 0.0) throw DomainError("sample_loss_pr: noise power must be positive");
    const int N = H_raw.N, K = H_raw.K;
    Tensor HrT({K, N}), HiT({K, N});
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            HrT.at(k, n) = H_raw.real(n, k);
            HiT.at(k, n) = H_raw.imag(n, k);
        }
    // Split the (NK, 2) stacked precoder into real and imaginary N x K parts.
    NodeId vre = tape.reshape(tape.matmul(v, tape.constant(Tensor::matrix({{1}, {0}}))), {N, K});
    NodeId vim = tape.reshape(tape.matmul(v, tape.constant(Tensor::matrix({{0}, {1}}))), {N, K});
    NodeId hr = tape.constant(HrT);
    NodeId hi = tape.constant(HiT);
    // h_k^H v_j split into real and imaginary parts.
    NodeId are = tape.add(tape.matmul(hr, vre), tape.matmul(hi, vim));
    NodeId aim = tape.sub(tape.matmul(hr, vim), tape.matmul(hi, vre));
    NodeId pwr = tape.add(tape.square(are), tape.square(aim));  // (K,K), [k][j] = |h_k^H v_j|^2

    Tensor diag_mask({K, K}), off_mask({K, K});
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) {
            diag_mask.at(a, b) = (a == b) ? 1.0 : 0.0;
            off_mask.at(a, b) = (a == b) ? 0.0 : 1.0;
        }
    NodeId s = tape.sum(tape.mul(pwr, tape.constant(diag_mask)), 1);
    NodeId interf = tape.add(tape.sum(tape.mul(pwr, tape.constant(off_mask)), 1),
                             tape.constant(Tensor::scalar(sigma2)));
    NodeId rate = tape.scalar_mul(
        tape.sub(tape.sum(tape.log(tape.add(interf, s))), tape.sum(tape.log(interf))),
        1.0 / kLog2);
    return tape.scalar_mul(rate, -1.0);
}

BaselineTag baseline_from(const std::string& s) {
    if (s == "exhaustive") return BaselineTag::exhaustive;
    if (s == "fp_ls") return BaselineTag::fp_ls;
    if (s == "wmmse_pc") return BaselineTag::wmmse_pc;
    if (s == "wmmse_precoding") return BaselineTag::wmmse_precoding;
    throw ConfigError("unknown baseline '" + s + "'");
}

const char* baseline_str(BaselineTag t) {
    switch (t) {
        case BaselineTag::exhaustive: return "exhaustive";
        case BaselineTag::fp_ls: return "fp_ls";
        case BaselineTag::wmmse_pc: return "wmmse_pc";
        case BaselineTag::wmmse_precoding: return "wmmse_precoding";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (n_samples < 1 || n_val < 0 || batch_size < 1 || epochs < 1) {
        throw ConfigError("TrainConfig: counts must be positive");
    }
    if (learning_rate < 0.0) throw ConfigError("TrainConfig: learning rate must be >= 0");
    if (normalization != "dataset" && normalization != "db_standardize" &&
        normalization != "none") {
        throw ConfigError("TrainConfig: unknown normalization mode '" + normalization + "'");
    }
    gnn.validate();
    loss.validate();
    baseline_from(baseline);
}

BatchLoss batch_loss(Tape& tape, const std::vector<NodeId>& outputs, const Dataset& ds,
                     const std::vector<int>& sample_ids, const LossConfig& cfg, double sigma2,
                     double p_max) {
    if (outputs.empty() || outputs.size() != sample_ids.size()) {
        throw ContractError("batch_loss: outputs and sample ids must align and be non-empty");
    }
    const long clamps_before = tape.log_clamp_count();
    NodeId total = -1;
    for (std::size_t b = 0; b < outputs.size(); ++b) {
        NodeId li;
        if (ds.problem == Problem::pr) {
            li = sample_loss_pr(tape, outputs[b], ds.Hs[sample_ids[b]], sigma2);
        } else {
            li = sample_loss_ls(tape, outputs[b], ds.alphas[sample_ids[b]], cfg, sigma2, p_max);
        }
        total = (total < 0) ? li : tape.add(total, li);
    }
    BatchLoss out;
    out.node = tape.scalar_mul(total, 1.0 / static_cast<double>(outputs.size()));
    out.value = tape.value(out.node)[0];
    out.log_clamps = tape.log_clamp_count() - clamps_before;
    return out;
}

namespace {

Graph sample_graph(const Dataset& ds, const GnnConfig& cfg, int idx) {
    if (ds.problem == Problem::pr) {
        return build_g_p_het(ds.features_pr(idx));
    }
    const ChannelMatrix f = ds.features_ls(idx);
    return cfg.graph_kind == GraphKind::ls_het ? build_g_ls_het(f, cfg.family)
                                               : build_g_ls_undir(f, cfg.family);
}

double dataset_p_max(const Dataset& ds) {
    return ds.problem == Problem::pr ? 1.0 : ds.params.tx_power_watts();
}

double dataset_sigma2(const Dataset& ds) {
    return ds.problem == Problem::pr ? 1.0 / db_to_linear(ds.snr_db) : noise_power(ds.params);
}

void check_problem_matches(const Dataset& ds, const GnnConfig& cfg) {
    const bool pr = ds.problem == Problem::pr;
    if (pr != (cfg.graph_kind == GraphKind::p_het)) {
        throw ConfigError("dataset problem does not match the GNN graph kind");
    }
}

void check_normalization(const TrainConfig& cfg, const Dataset& ds) {
    if (cfg.normalization != "dataset" && cfg.normalization != ds.norm_mode) {
        throw ConfigError("TrainConfig normalization '" + cfg.normalization +
                          "' conflicts with the dataset's stored mode '" + ds.norm_mode + "'");
    }
}

} // namespace

std::vector<double> baseline_rates(const Dataset& ds, int begin, int end, BaselineTag tag) {
    if (begin < 0 || end > ds.size() || begin >= end) {
        throw ContractError("baseline_rates: empty or out-of-range slice");
    }
    const double sigma2 = dataset_sigma2(ds);
    const double p_max = dataset_p_max(ds);
    std::vector<double> rates;
    rates.reserve(end - begin);
    for (int i = begin; i < end; ++i) {
        switch (tag) {
            case BaselineTag::exhaustive: {
                const std::vector<double> p(ds.K(), p_max);
                rates.push_back(exhaustive_ls(ds.alphas[i], p, sigma2).rate);
                break;
            }
            case BaselineTag::fp_ls: {
                const std::vector<double> p(ds.K(), p_max);
                const ScheduleVector sv = fp_ls(ds.alphas[i], p, sigma2);
                rates.push_back(sumrate_ls(sv.x, ds.alphas[i], p, sigma2));
                break;
            }
            case BaselineTag::wmmse_pc: {
                const WmmsePcResult r = wmmse_pc(ds.alphas[i], p_max, sigma2);
                rates.push_back(sumrate_pc(r.powers.p, ds.alphas[i], sigma2));
                break;
            }
            case BaselineTag::wmmse_precoding: {
                const WmmsePrecodingResult r = wmmse_precoding(ds.Hs[i], p_max, sigma2);
                rates.push_back(sumrate_pr(r.precoder.V, ds.Hs[i], sigma2));
                break;
            }
        }
    }
    return rates;
}

std::vector<double> model_rates(const GnnModel& model, const Dataset& ds, int begin, int end) {
    if (begin < 0 || end > ds.size() || begin >= end) {
        throw ContractError("model_rates: empty or out-of-range slice");
    }
    check_problem_matches(ds, model.config);
    const double sigma2 = dataset_sigma2(ds);
    const double p_max = dataset_p_max(ds);
    std::vector<double> rates;
    rates.reserve(end - begin);
    for (int i = begin; i < end; ++i) {
        const Tensor out = gnn_forward_value(model, sample_graph(ds, model.config, i), p_max);
        if (ds.problem == Problem::ls) {
            std::vector<int> x(ds.K());
            for (int k = 0; k < ds.K(); ++k) x[k] = out[k] >= 0.5 ? 1 : 0;
            const std::vector<double> p(ds.K(), p_max);
            rates.push_back(sumrate_ls(x, ds.alphas[i], p, sigma2));
        } else if (ds.problem == Problem::pc) {
            PowerVector pv;
            pv.p_max = p_max;
            pv.p.resize(ds.K());
            for (int k = 0; k < ds.K(); ++k) pv.p[k] = p_max * out[k];
            pv.validate();  // box constraint holds by construction
            rates.push_back(sumrate_pc(pv.p, ds.alphas[i], sigma2));
        } else {
            PrecodingMatrix pm;
            pm.p_max = p_max;
            pm.V = ComplexChannelMatrix(ds.N, ds.K_pr);
            for (int n = 0; n < ds.N; ++n)
                for (int k = 0; k < ds.K_pr; ++k) {
                    pm.V.real(n, k) = out.data()[(static_cast<std::size_t>(n) * ds.K_pr + k) * 2];
                    pm.V.imag(n, k) =
                        out.data()[(static_cast<std::size_t>(n) * ds.K_pr + k) * 2 + 1];
                }
            pm.validate();  // trace constraint holds by construction
            rates.push_back(sumrate_pr(pm.V, ds.Hs[i], sigma2));
        }
    }
    return rates;
}

EvalResult evaluate(const GnnModel& model, const Dataset& ds, int begin, int end,
                    BaselineTag baseline) {
    EvalResult res;
    res.baseline = baseline_str(baseline);
    res.rates_learned = model_rates(model, ds, begin, end);
    res.rates_baseline = baseline_rates(ds, begin, end, baseline);
    res.n_runs = static_cast<int>(res.rates_learned.size());
    double num = 0.0, den = 0.0;
    for (double r : res.rates_learned) num += r;
    for (double r : res.rates_baseline) den += r;
    res.sum_rate_ratio = den > 0.0 ? num / den : 0.0;
    return res;
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds, const GnnModel* warm_start) {
    cfg.validate();
    check_problem_matches(ds, cfg.gnn);
    check_normalization(cfg, ds);
    if (cfg.loss.problem != ds.problem) {
        throw ConfigError("train: loss problem tag does not match the dataset");
    }
    if (cfg.n_samples + cfg.n_val > ds.size()) {
        throw ConfigError("train: dataset smaller than n_samples + n_val");
    }
    const double sigma2 = dataset_sigma2(ds);
    const double p_max = dataset_p_max(ds);
    const BaselineTag val_tag = baseline_from(cfg.baseline);

    GnnModel model = warm_start ? *warm_start : init_model(cfg.gnn, cfg.seed);
    if (warm_start && gnn_config_to_json(warm_start->config) != gnn_config_to_json(cfg.gnn)) {
        throw ConfigError("train: warm-start model config does not match");
    }
    AdamState adam;
    adam.lr = cfg.learning_rate;

    const bool has_val = cfg.n_val > 0;
    std::vector<double> val_base;
    if (has_val) {
        val_base = baseline_rates(ds, cfg.n_samples, cfg.n_samples + cfg.n_val, val_tag);
    }
    const double val_base_sum =
        val_base.empty() ? 0.0 : std::accumulate(val_base.begin(), val_base.end(), 0.0);

    // Graphs are rebuilt per epoch from stored features; cache them once.
    std::vector<Graph> graphs;
    graphs.reserve(cfg.n_samples);
    for (int i = 0; i < cfg.n_samples; ++i) graphs.push_back(sample_graph(ds, cfg.gnn, i));

    TrainResult result;
    result.model = model;
    result.best_val_ratio = -std::numeric_limits<double>::infinity();
    int evals_since_best = 0;

    std::vector<int> order(cfg.n_samples);
    for (int i = 0; i < cfg.n_samples; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::derive(cfg.seed, 0xe90c + epoch));
        for (int i = cfg.n_samples - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.uniform_int(i + 1));
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < cfg.n_samples; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, cfg.n_samples - start);
            try {
                Tape tape;
                auto params = insert_params(tape, model, true);
                std::vector<NodeId> outputs;
                std::vector<int> ids;
                outputs.reserve(bsz);
                ids.reserve(bsz);
                for (int b = 0; b < bsz; ++b) {
                    const int idx = order[start + b];
                    outputs.push_back(
                        gnn_forward(tape, cfg.gnn, params, graphs[idx], p_max).output_node);
                    ids.push_back(idx);
                }
                const BatchLoss bl = batch_loss(tape, outputs, ds, ids, cfg.loss, sigma2, p_max);
                NodeId loss = bl.node;
                const double loss_value = bl.value;
                if (!std::isfinite(loss_value)) throw NumericError("non-finite loss");
                tape.backward(loss);
                std::map<std::string, Tensor> grads;
                for (const auto& [name, node] : params) {
                    if (tape.has_grad(node)) grads.emplace(name, tape.grad(node));
                }
                adam_step(model.weights, grads, adam);
                epoch_loss += loss_value;
                ++batches;
            } catch (const NumericError& e) {
                throw Error("training aborted: " + std::string(e.what()) + " at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(start / cfg.batch_size) +
                            " (lr=" + std::to_string(cfg.learning_rate) + ")");
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / std::max(batches, 1);
        stats.val_ratio = std::numeric_limits<double>::quiet_NaN();
        if (has_val && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs - 1)) {
            const std::vector<double> vr =
                model_rates(model, ds, cfg.n_samples, cfg.n_samples + cfg.n_val);
            const double num = std::accumulate(vr.begin(), vr.end(), 0.0);
            stats.val_ratio = val_base_sum > 0.0 ? num / val_base_sum : 0.0;
            if (stats.val_ratio > result.best_val_ratio) {
                result.best_val_ratio = stats.val_ratio;
                result.model = model;
                evals_since_best = 0;
            } else {
                ++evals_since_best;
            }
        }
        result.history.push_back(stats);
        result.epochs_run = epoch + 1;
        if (has_val && cfg.patience > 0 && evals_since_best >= cfg.patience) break;
    }
    if (!has_val) {
        result.model = model;
        result.best_val_ratio = 0.0;
    }
    return result;
}

// ---- experiment runner ----

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    try {
        cfg.gnn = gnn_config_from_json(j.at("gnn"));
        if (j.contains("n_samples")) cfg.n_samples = j.at("n_samples").get<int>();
        if (j.contains("n_val")) cfg.n_val = j.at("n_val").get<int>();
        if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
        if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
        if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("patience")) cfg.patience = j.at("patience").get<int>();
        if (j.contains("eval_every")) cfg.eval_every = j.at("eval_every").get<int>();
        if (j.contains("baseline")) cfg.baseline = j.at("baseline").get<std::string>();
        if (j.contains("normalization"))
            cfg.normalization = j.at("normalization").get<std::string>();
        if (j.contains("loss")) {
            const json& l = j.at("loss");
            if (l.contains("problem"))
                cfg.loss.problem = problem_from(l.at("problem").get<std::string>());
            if (l.contains("w1")) cfg.loss.w1 = l.at("w1").get<double>();
            if (l.contains("w2")) cfg.loss.w2 = l.at("w2").get<double>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad train config: ") + e.what());
    }
    return cfg;
}

} // namespace

ExperimentOutcome run_experiment(const std::string& spec_path, const std::string& out_dir) {
    std::ifstream is(spec_path);
    if (!is) throw ConfigError("run_experiment: cannot open spec '" + spec_path + "'");
    json spec;
    try {
        spec = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run_experiment: spec parse error: ") + e.what());
    }

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string manifest_path = out_dir + "/manifest.json";
    const std::string results_path = out_dir + "/results.csv";
    const std::string summary_path = out_dir + "/summary.csv";

    json manifest = json::object();
    if (fs::exists(manifest_path)) {
        std::ifstream mf(manifest_path);
        manifest = json::parse(mf);
    }

    const std::string experiment_id =
        spec.contains("experiment_id") ? spec.at("experiment_id").get<std::string>() : "exp";

    // Dataset: either referenced by path or generated in place.
    Dataset ds;
    if (!spec.contains("dataset")) throw ConfigError("run_experiment: spec missing 'dataset'");
    const json& dspec = spec.at("dataset");
    if (dspec.contains("path")) {
        ds = load_dataset(dspec.at("path").get<std::string>());
    } else {
        const Problem problem = problem_from(dspec.at("problem").get<std::string>());
        const int n = dspec.at("n_samples").get<int>();
        const std::uint64_t seed = dspec.value("seed", 7ULL);
        if (problem == Problem::pr) {
            ds = generate_dataset_pr(dspec.at("N").get<int>(), dspec.at("K").get<int>(),
                                     dspec.value("snr_db", 10.0), n, seed);
        } else {
            ScenarioParams params;
            if (dspec.contains("params")) params = scenario_params_from_json(dspec.at("params"));
            if (dspec.contains("K")) params.K = dspec.at("K").get<int>();
            ds = generate_dataset_ls(problem, params, n, seed);
        }
    }

    if (!fs::exists(results_path)) {
        std::ofstream rf(results_path);
        rf << "experiment_id,config_hash,config_name,seed,metric,value\n";
    }

    ExperimentOutcome outcome;
    outcome.results_csv = results_path;
    outcome.summary_csv = summary_path;

    std::vector<std::uint64_t> seeds;
    if (spec.contains("seeds"))
        seeds = spec.at("seeds").get<std::vector<std::uint64_t>>();
    else
        seeds = {1};

    const json grid = spec.value("grid", json::array());
    for (const auto& cell : grid) {
        const std::string name = cell.value("name", "cell");
        TrainConfig base_cfg = train_config_from_json(cell.at("train"));
        const std::string cfg_dump = cell.at("train").dump();
        const std::uint64_t cfg_hash = fnv1a(cfg_dump);
        for (std::uint64_t seed : seeds) {
            const std::string cell_key =
                name + ":" + std::to_string(cfg_hash) + ":" + std::to_string(seed);
            if (manifest.contains(cell_key)) {
                ++outcome.cells_skipped;
                continue;
            }
            TrainConfig cfg = base_cfg;
            cfg.seed = seed;
            if (!cell.at("train").contains("loss")) {
                cfg.loss = LossConfig::defaults(ds.problem);
            } else if (!cell.at("train").at("loss").contains("problem")) {
                cfg.loss.problem = ds.problem;
            }
            const TrainResult tr = train(cfg, ds);
            const int test_begin = cfg.n_samples + cfg.n_val;
            double test_ratio = std::numeric_limits<double>::quiet_NaN();
            if (test_begin < ds.size()) {
                test_ratio = evaluate(tr.model, ds, test_begin, ds.size(),
                                      baseline_from(cfg.baseline))
                                 .sum_rate_ratio;
            }
            save_checkpoint(out_dir + "/ckpt_" + name + "_" + std::to_string(seed) + ".bin",
                            tr.model);
            {
                std::ofstream rf(results_path, std::ios::app);
                rf << experiment_id << ',' << cfg_hash << ',' << name << ',' << seed
                   << ",best_val_ratio," << tr.best_val_ratio << '\n';
                rf << experiment_id << ',' << cfg_hash << ',' << name << ',' << seed
                   << ",epochs_run," << tr.epochs_run << '\n';
                if (std::isfinite(test_ratio)) {
                    rf << experiment_id << ',' << cfg_hash << ',' << name << ',' << seed
                       << ",test_ratio," << test_ratio << '\n';
                }
            }
            manifest[cell_key] = true;
            std::ofstream mf(manifest_path);
            mf << manifest.dump(2);
            ++outcome.cells_run;
        }
    }

    // Summary: mean/std per (config, metric) from the results CSV.
    {
        std::ifstream rf(results_path);
        std::string line;
        std::getline(rf, line);  // header
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
            groups[name + "," + metric].push_back(std::stod(value));
        }
        std::ofstream sf(summary_path);
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
    }
    return outcome;
}

} // namespace wgnn
