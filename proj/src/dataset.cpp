#include "wgnn/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "wgnn/rng.hpp"

namespace wgnn {

namespace {

constexpr char kMagic[8] = {'W', 'G', 'N', 'N', 'D', 'S', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("dataset: truncated file");
}

} // namespace

Problem problem_from(const std::string& s) {
    if (s == "ls") return Problem::ls;
    if (s == "pc") return Problem::pc;
    if (s == "pr") return Problem::pr;
    throw ConfigError("unknown problem '" + s + "'");
}

const char* problem_str(Problem p) {
    switch (p) {
        case Problem::ls: return "ls";
        case Problem::pc: return "pc";
        case Problem::pr: return "pr";
    }
    return "?";
}

ChannelMatrix Dataset::features_ls(int idx) const {
    if (problem == Problem::pr) throw ContractError("features_ls on a precoding dataset");
    ChannelMatrix f = alphas.at(idx);
    if (norm_mode == "db_standardize") {
        const double sd = norm_std > 0.0 ? norm_std : 1.0;
        for (double& g : f.gains) g = (10.0 * std::log10(g) - norm_mean) / sd;
    } else if (norm_mode != "none") {
        throw ConfigError("unknown normalization mode '" + norm_mode + "'");
    }
    return f;
}

ComplexChannelMatrix Dataset::features_pr(int idx) const {
    if (problem != Problem::pr) throw ContractError("features_pr on a scheduling dataset");
    return Hs.at(idx);  // Rayleigh entries are already unit-scale
}

Dataset generate_dataset_ls(Problem problem, const ScenarioParams& params, int n_samples,
                            std::uint64_t seed) {
    if (problem == Problem::pr) throw ConfigError("generate_dataset_ls: use generate_dataset_pr");
    if (n_samples < 1) throw ConfigError("generate_dataset_ls: n_samples must be >= 1");
    params.validate();
    Dataset ds;
    ds.problem = problem;
    ds.params = params;
    ds.base_seed = seed;
    ds.seeds.reserve(n_samples);
    ds.alphas.reserve(n_samples);
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n_samples; ++i) {
        const std::uint64_t s = Rng::derive(seed, static_cast<std::uint64_t>(i));
        ds.seeds.push_back(s);
        const D2dScenario sc = gen_d2d_scenario(params, s);
        ds.alphas.push_back(gen_channel_matrix(sc, params, Rng::derive(s, 1)));
        for (double g : ds.alphas.back().gains) {
            const double db = 10.0 * std::log10(g);
            sum += db;
            sumsq += db * db;
            ++count;
        }
    }
    ds.norm_mode = "db_standardize";
    ds.norm_mean = sum / static_cast<double>(count);
    const double var = sumsq / static_cast<double>(count) - ds.norm_mean * ds.norm_mean;
    ds.norm_std = std::sqrt(std::max(var, 1e-12));
    return ds;
}

Dataset generate_dataset_pr(int N, int K, double snr_db, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw ConfigError("generate_dataset_pr: n_samples must be >= 1");
    Dataset ds;
    ds.problem = Problem::pr;
    ds.N = N;
    ds.K_pr = K;
    ds.snr_db = snr_db;
    ds.base_seed = seed;
    ds.norm_mode = "none";
    ds.seeds.reserve(n_samples);
    ds.Hs.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const std::uint64_t s = Rng::derive(seed, static_cast<std::uint64_t>(i));
        ds.seeds.push_back(s);
        ds.Hs.push_back(gen_rayleigh_H(N, K, s));
    }
    return ds;
}

nlohmann::json scenario_params_to_json(const ScenarioParams& p) {
    nlohmann::json j;
    j["K"] = p.K;
    j["area_side"] = p.area_side;
    j["d2d_min"] = p.d2d_min;
    j["d2d_max"] = p.d2d_max;
    j["bandwidth"] = p.bandwidth;
    j["carrier"] = p.carrier;
    j["noise_psd"] = p.noise_psd;
    j["antenna_height"] = p.antenna_height;
    j["antenna_gain"] = p.antenna_gain;
    j["tx_power_dbm"] = p.tx_power_dbm;
    j["pathloss_exp"] = p.pathloss_exp;
    j["shadowing_std_db"] = p.shadowing_std_db;
    j["fading"] = p.fading == FadingModel::rayleigh ? "rayleigh" : "unit";
    return j;
}

ScenarioParams scenario_params_from_json(const nlohmann::json& j) {
    ScenarioParams p;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("K", p.K);
    get("area_side", p.area_side);
    get("d2d_min", p.d2d_min);
    get("d2d_max", p.d2d_max);
    get("bandwidth", p.bandwidth);
    get("carrier", p.carrier);
    get("noise_psd", p.noise_psd);
    get("antenna_height", p.antenna_height);
    get("antenna_gain", p.antenna_gain);
    get("tx_power_dbm", p.tx_power_dbm);
    get("pathloss_exp", p.pathloss_exp);
    get("shadowing_std_db", p.shadowing_std_db);
    if (j.contains("fading")) {
        const std::string f = j.at("fading").get<std::string>();
        if (f == "rayleigh")
            p.fading = FadingModel::rayleigh;
        else if (f == "unit")
            p.fading = FadingModel::unit;
        else
            throw ConfigError("unknown fading model '" + f + "'");
    }
    return p;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("dataset: cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    nlohmann::json header;
    header["format_version"] = kVersion;
    header["problem"] = problem_str(ds.problem);
    header["params"] = scenario_params_to_json(ds.params);
    header["N"] = ds.N;
    header["K_pr"] = ds.K_pr;
    header["snr_db"] = ds.snr_db;
    header["base_seed"] = ds.base_seed;
    header["n_samples"] = ds.size();
    header["norm_mode"] = ds.norm_mode;
    header["norm_mean"] = ds.norm_mean;
    header["norm_std"] = ds.norm_std;
    const std::string hs = header.dump();
    write_pod(os, static_cast<std::uint32_t>(hs.size()));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    const int n = ds.size();
    for (int i = 0; i < n; ++i) {
        write_pod(os, ds.seeds[i]);
        if (ds.problem == Problem::pr) {
            const auto& H = ds.Hs[i];
            os.write(reinterpret_cast<const char*>(H.re.data()),
                     static_cast<std::streamsize>(H.re.size() * sizeof(double)));
            os.write(reinterpret_cast<const char*>(H.im.data()),
                     static_cast<std::streamsize>(H.im.size() * sizeof(double)));
        } else {
            const auto& a = ds.alphas[i];
            os.write(reinterpret_cast<const char*>(a.gains.data()),
                     static_cast<std::streamsize>(a.gains.size() * sizeof(double)));
        }
    }
    if (!os) throw Error("dataset: write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("dataset: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw Error("dataset: bad magic in '" + path + "'");
    }
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kVersion) throw Error("dataset: unsupported format_version");
    std::uint32_t hlen = 0;
    read_pod(is, hlen);
    std::string hs(hlen, '\0');
    is.read(hs.data(), hlen);
    if (!is) throw Error("dataset: truncated header");
    const nlohmann::json header = nlohmann::json::parse(hs);

    Dataset ds;
    ds.problem = problem_from(header.at("problem").get<std::string>());
    ds.params = scenario_params_from_json(header.at("params"));
    ds.N = header.at("N").get<int>();
    ds.K_pr = header.at("K_pr").get<int>();
    ds.snr_db = header.at("snr_db").get<double>();
    ds.base_seed = header.at("base_seed").get<std::uint64_t>();
    ds.norm_mode = header.at("norm_mode").get<std::string>();
    ds.norm_mean = header.at("norm_mean").get<double>();
    ds.norm_std = header.at("norm_std").get<double>();
    const int n = header.at("n_samples").get<int>();
    ds.seeds.resize(n);
    for (int i = 0; i < n; ++i) {
        read_pod(is, ds.seeds[i]);
        if (ds.problem == Problem::pr) {
            ComplexChannelMatrix H(ds.N, ds.K_pr);
            is.read(reinterpret_cast<char*>(H.re.data()),
                    static_cast<std::streamsize>(H.re.size() * sizeof(double)));
            is.read(reinterpret_cast<char*>(H.im.data()),
                    static_cast<std::streamsize>(H.im.size() * sizeof(double)));
            if (!is) throw Error("dataset: truncated sample");
            ds.Hs.push_back(std::move(H));
        } else {
            ChannelMatrix a(ds.params.K);
            is.read(reinterpret_cast<char*>(a.gains.data()),
                    static_cast<std::streamsize>(a.gains.size() * sizeof(double)));
            if (!is) throw Error("dataset: truncated sample");
            ds.alphas.push_back(std::move(a));
        }
    }
    return ds;
}

} // namespace wgnn
