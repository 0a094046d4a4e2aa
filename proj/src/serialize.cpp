#include "wgnn/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace wgnn {

namespace {

using nlohmann::json;

constexpr char kCkptMagic[8] = {'W', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

const char* family_str(GnnFamily f) { return f == GnnFamily::vertex ? "vertex" : "edge"; }

GnnFamily family_from(const std::string& s) {
    if (s == "vertex") return GnnFamily::vertex;
    if (s == "edge") return GnnFamily::edge;
    throw ConfigError("unknown family '" + s + "'");
}

const char* kind_str(GraphKind k) {
    switch (k) {
        case GraphKind::ls_het: return "ls_het";
        case GraphKind::ls_undir: return "ls_undir";
        case GraphKind::p_het: return "p_het";
    }
    return "?";
}

GraphKind kind_from(const std::string& s) {
    if (s == "ls_het") return GraphKind::ls_het;
    if (s == "ls_undir") return GraphKind::ls_undir;
    if (s == "p_het") return GraphKind::p_het;
    throw ConfigError("unknown graph_kind '" + s + "'");
}

const char* pool_str(PoolMode p) {
    switch (p) {
        case PoolMode::sum: return "sum";
        case PoolMode::mean: return "mean";
        case PoolMode::max: return "max";
    }
    return "?";
}

PoolMode pool_from(const std::string& s) {
    if (s == "sum") return PoolMode::sum;
    if (s == "mean") return PoolMode::mean;
    if (s == "max") return PoolMode::max;
    throw ConfigError("unknown pooling '" + s + "'");
}

json processor_to_json(const ProcessorConfig& p) {
    json j;
    j["kind"] = (p.kind == ProcessorKind::linear) ? "linear" : "fnn";
    if (!p.hidden.empty()) j["hidden"] = p.hidden;
    return j;
}

ProcessorConfig processor_from_json(const json& j) {
    ProcessorConfig p;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear")
        p.kind = ProcessorKind::linear;
    else if (kind == "fnn")
        p.kind = ProcessorKind::fnn;
    else
        throw ConfigError("unknown processor kind '" + kind + "'");
    if (j.contains("hidden")) p.hidden = j.at("hidden").get<std::vector<int>>();
    return p;
}

json combiner_to_json(const CombinerConfig& c) {
    json j;
    switch (c.kind) {
        case CombinerKind::linear: j["kind"] = "linear"; break;
        case CombinerKind::affine_act: j["kind"] = "affine_act"; break;
        case CombinerKind::fnn: j["kind"] = "fnn"; break;
    }
    if (!c.hidden.empty()) j["hidden"] = c.hidden;
    return j;
}

CombinerConfig combiner_from_json(const json& j) {
    CombinerConfig c;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear")
        c.kind = CombinerKind::linear;
    else if (kind == "affine_act")
        c.kind = CombinerKind::affine_act;
    else if (kind == "fnn")
        c.kind = CombinerKind::fnn;
    else
        throw ConfigError("unknown combiner kind '" + kind + "'");
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<int>>();
    return c;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("checkpoint: truncated file");
}

} // namespace

nlohmann::json gnn_config_to_json(const GnnConfig& c) {
    json j;
    j["family"] = family_str(c.family);
    j["graph_kind"] = kind_str(c.graph_kind);
    j["L"] = c.L;
    j["dims"] = c.dims;
    if (!c.agg_dims.empty()) j["agg_dims"] = c.agg_dims;
    j["processor"] = processor_to_json(c.processor);
    j["combiner"] = combiner_to_json(c.combiner);
    if (c.combiner_sig) j["combiner_sig"] = combiner_to_json(*c.combiner_sig);
    if (c.combiner_int) j["combiner_int"] = combiner_to_json(*c.combiner_int);
    j["pooling"] = pool_str(c.pooling);
    j["activation"] = c.activation;
    json r;
    switch (c.readout.kind) {
        case ReadoutKind::none: r["kind"] = "none"; break;
        case ReadoutKind::fnn: r["kind"] = "fnn"; break;
        case ReadoutKind::fnn_with_h: r["kind"] = "fnn_with_H"; break;
    }
    if (!c.readout.hidden.empty()) r["hidden"] = c.readout.hidden;
    j["readout"] = r;
    return j;
}

GnnConfig gnn_config_from_json(const nlohmann::json& j) {
    GnnConfig c;
    try {
        c.family = family_from(j.at("family").get<std::string>());
        c.graph_kind = kind_from(j.at("graph_kind").get<std::string>());
        c.dims = j.at("dims").get<std::vector<int>>();
        c.L = j.contains("L") ? j.at("L").get<int>() : static_cast<int>(c.dims.size());
        if (j.contains("agg_dims")) c.agg_dims = j.at("agg_dims").get<std::vector<int>>();
        if (j.contains("processor")) c.processor = processor_from_json(j.at("processor"));
        if (j.contains("combiner")) c.combiner = combiner_from_json(j.at("combiner"));
        if (j.contains("combiner_sig")) c.combiner_sig = combiner_from_json(j.at("combiner_sig"));
        if (j.contains("combiner_int")) c.combiner_int = combiner_from_json(j.at("combiner_int"));
        if (j.contains("pooling")) c.pooling = pool_from(j.at("pooling").get<std::string>());
        if (j.contains("activation")) c.activation = j.at("activation").get<std::string>();
        if (j.contains("readout")) {
            const json& r = j.at("readout");
            const std::string kind = r.at("kind").get<std::string>();
            if (kind == "none")
                c.readout.kind = ReadoutKind::none;
            else if (kind == "fnn")
                c.readout.kind = ReadoutKind::fnn;
            else if (kind == "fnn_with_H")
                c.readout.kind = ReadoutKind::fnn_with_h;
            else
                throw ConfigError("unknown readout kind '" + kind + "'");
            if (r.contains("hidden")) c.readout.hidden = r.at("hidden").get<std::vector<int>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad GNN config: ") + e.what());
    }
    c.validate();
    return c;
}

void save_checkpoint(const std::string& path, const GnnModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("checkpoint: cannot open '" + path + "' for writing");
    os.write(kCkptMagic, sizeof(kCkptMagic));
    write_pod(os, kCkptVersion);
    const std::string cfg = gnn_config_to_json(model.config).dump();
    write_pod(os, static_cast<std::uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_pod(os, static_cast<std::uint32_t>(model.weights.size()));
    for (const auto& [name, tensor] : model.weights) {
        write_pod(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<std::uint32_t>(tensor.shape().size()));
        for (int d : tensor.shape()) write_pod(os, static_cast<std::uint32_t>(d));
        os.write(reinterpret_cast<const char*>(tensor.data().data()),
                 static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    }
    if (!os) throw Error("checkpoint: write failed for '" + path + "'");
}

GnnModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
        throw Error("checkpoint: bad magic in '" + path + "'");
    }
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kCkptVersion) {
        throw Error("checkpoint: unsupported format_version " + std::to_string(version));
    }
    std::uint32_t cfg_len = 0;
    read_pod(is, cfg_len);
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), cfg_len);
    if (!is) throw Error("checkpoint: truncated config");
    GnnModel model;
    model.config = gnn_config_from_json(nlohmann::json::parse(cfg));
    std::uint32_t n_tensors = 0;
    read_pod(is, n_tensors);
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
        std::uint32_t name_len = 0;
        read_pod(is, name_len);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        std::uint32_t rank = 0;
        read_pod(is, rank);
        std::vector<int> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) {
            std::uint32_t v = 0;
            read_pod(is, v);
            shape[d] = static_cast<int>(v);
        }
        Tensor tensor(shape);
        is.read(reinterpret_cast<char*>(tensor.data().data()),
                static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
        if (!is) throw Error("checkpoint: truncated tensor data");
        model.weights.emplace(std::move(name), std::move(tensor));
    }
    // Shape-check against the config's expected parameter set.
    Tape scratch;
    insert_params(scratch, model, false);
    return model;
}

} // namespace wgnn
