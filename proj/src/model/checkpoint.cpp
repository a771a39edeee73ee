#include "driftlab/model/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'F', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
    return nlohmann::json{
        {"vocab_size", c.vocab_size},
        {"model_dim", c.model_dim},
        {"layers", c.layers},
        {"heads_order", c.heads_order},
        {"kind", to_string(c.kind)},
        {"max_len", c.max_len},
        {"gamma", c.gamma},
        {"beta", c.beta},
        {"layer_norm_eps", c.layer_norm_eps},
        {"log_pointer_loss", c.log_pointer_loss},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.model_dim = j.at("model_dim").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.heads_order = j.at("heads_order").get<std::string>();
    c.kind = bug_kind_from_string(j.at("kind").get<std::string>());
    c.max_len = j.at("max_len").get<std::size_t>();
    c.gamma = j.at("gamma").get<double>();
    c.beta = j.at("beta").get<double>();
    c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
    c.log_pointer_loss = j.at("log_pointer_loss").get<bool>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
    nlohmann::json header;
    header["version"] = kCheckpointVersion;
    header["config"] = config_to_json(params.config);
    header["vocab"] = params.vocab.id_to_text;
    nlohmann::json tensors = nlohmann::json::array();
    for (const TensorView& v : params.arena.tensors) {
        tensors.push_back({{"name", v.name}, {"rows", v.rows}, {"cols", v.cols}});
    }
    header["tensors"] = std::move(tensors);
    std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    out.write(reinterpret_cast<const char*>(params.arena.data.data()),
              static_cast<std::streamsize>(params.arena.data.size() * sizeof(double)));
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a checkpoint file: " + path);
    }
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || header_len == 0 || header_len > (1u << 30)) {
        throw FormatError("corrupt checkpoint header length: " + path);
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw FormatError("truncated checkpoint header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid checkpoint header: " + std::string(e.what()));
    }

    ModelParams params;
    try {
        if (header.at("version").get<std::uint32_t>() != kCheckpointVersion) {
            throw FormatError("unsupported checkpoint version in " + path);
        }
        params.config = config_from_json(header.at("config"));
        params.vocab = Vocab::from_list(header.at("vocab").get<std::vector<std::string>>());
        params.arena = build_arena(params.config);

        const nlohmann::json& tensors = header.at("tensors");
        if (tensors.size() != params.arena.tensors.size()) {
            throw FormatError("checkpoint tensor count does not match config");
        }
        for (std::size_t i = 0; i < params.arena.tensors.size(); ++i) {
            const TensorView& expect = params.arena.tensors[i];
            const nlohmann::json& got = tensors[i];
            if (got.at("name").get<std::string>() != expect.name ||
                got.at("rows").get<std::size_t>() != expect.rows ||
                got.at("cols").get<std::size_t>() != expect.cols) {
                throw FormatError("checkpoint tensor mismatch at " + expect.name);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid checkpoint header: " + std::string(e.what()));
    }
    if (params.vocab.size() != params.config.vocab_size) {
        throw FormatError("checkpoint vocabulary size does not match config");
    }

    in.read(reinterpret_cast<char*>(params.arena.data.data()),
            static_cast<std::streamsize>(params.arena.data.size() * sizeof(double)));
    if (!in || in.gcount() !=
                   static_cast<std::streamsize>(params.arena.data.size() * sizeof(double))) {
        throw FormatError("truncated checkpoint parameters: " + path);
    }
    char extra;
    if (in.read(&extra, 1)) throw FormatError("trailing bytes in checkpoint: " + path);
    return params;
}

}  // namespace driftlab
