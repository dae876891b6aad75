#include "groupenc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "groupenc/errors.hpp"
#include "groupenc/text_format.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint containers assume a little-endian host");

namespace groupenc {

namespace {

constexpr char kMagic[4] = {'G', 'E', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ostream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

template <typename T>
void write_pod(std::ostream& out, T value) {
    write_bytes(out, &value, sizeof(T));
}

void read_bytes(std::istream& in, void* data, std::size_t size, const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in.gcount()) != size) {
        throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T value;
    read_bytes(in, &value, sizeof(T), what);
    return value;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    write_bytes(out, values.data(), values.size() * sizeof(double));
}

void read_doubles(std::istream& in, std::vector<double>& values, const char* what) {
    read_bytes(in, values.data(), values.size() * sizeof(double), what);
}

void write_network(std::ostream& out, const NetworkParams& net) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const LayerParams& layer : net.layers) {
        write_pod<std::uint64_t>(out, layer.weight.rows());
        write_pod<std::uint64_t>(out, layer.weight.cols());
    }
    for (const LayerParams& layer : net.layers) {
        write_doubles(out, layer.weight.data());
        write_doubles(out, layer.bias);
    }
    write_pod<std::uint64_t>(out, net.adam_step_count);
    for (const LayerParams& layer : net.layers) {
        write_doubles(out, layer.weight_m.data());
        write_doubles(out, layer.weight_v.data());
        write_doubles(out, layer.bias_m);
        write_doubles(out, layer.bias_v);
    }
}

NetworkParams read_network(std::istream& in) {
    NetworkParams net;
    const std::uint32_t layer_count = read_pod<std::uint32_t>(in, "layer count");
    net.layers.resize(layer_count);
    for (LayerParams& layer : net.layers) {
        const std::uint64_t in_dim = read_pod<std::uint64_t>(in, "layer dims");
        const std::uint64_t out_dim = read_pod<std::uint64_t>(in, "layer dims");
        layer.weight = DenseMatrix(in_dim, out_dim);
        layer.bias.assign(out_dim, 0.0);
        layer.weight_m = DenseMatrix(in_dim, out_dim);
        layer.weight_v = DenseMatrix(in_dim, out_dim);
        layer.bias_m.assign(out_dim, 0.0);
        layer.bias_v.assign(out_dim, 0.0);
    }
    for (LayerParams& layer : net.layers) {
        read_doubles(in, layer.weight.data(), "weights");
        read_doubles(in, layer.bias, "biases");
    }
    net.adam_step_count = read_pod<std::uint64_t>(in, "adam step count");
    for (LayerParams& layer : net.layers) {
        read_doubles(in, layer.weight_m.data(), "adam moments");
        read_doubles(in, layer.weight_v.data(), "adam moments");
        read_doubles(in, layer.bias_m, "adam moments");
        read_doubles(in, layer.bias_v, "adam moments");
    }
    return net;
}

std::string join_dims(const std::vector<Index>& dims) {
    std::string out;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(dims[i]);
    }
    return out;
}

std::vector<Index> split_dims(const std::string& text) {
    std::vector<Index> dims;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        dims.push_back(parse_u64(item));
    }
    return dims;
}

} // namespace

std::string serialize_model_config(const ModelConfig& config) {
    std::string out;
    out += "kind=" + std::string(model_kind_name(config.kind)) + "\n";
    out += "input_dim=" + std::to_string(config.input_dim) + "\n";
    out += "latent_dim=" + std::to_string(config.latent_dim) + "\n";
    out += "gamma=" + std::to_string(config.gamma) + "\n";
    out += "kl_weight=" + format_double(config.kl_weight) + "\n";
    out += "strategy=" + std::string(group_strategy_name(config.group_strategy)) + "\n";
    out += "encoder_hidden=" + join_dims(config.encoder_hidden) + "\n";
    out += "decoder_hidden=" + join_dims(config.decoder_hidden) + "\n";
    return out;
}

ModelConfig parse_model_config(const std::string& text) {
    ModelConfig config;
    std::stringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("checkpoint config: bad line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "kind") {
            config.kind = parse_model_kind(value);
        } else if (key == "input_dim") {
            config.input_dim = parse_u64(value);
        } else if (key == "latent_dim") {
            config.latent_dim = parse_u64(value);
        } else if (key == "gamma") {
            config.gamma = static_cast<std::uint32_t>(parse_u64(value));
        } else if (key == "kl_weight") {
            config.kl_weight = parse_double(value);
        } else if (key == "strategy") {
            config.group_strategy = parse_group_strategy(value);
        } else if (key == "encoder_hidden") {
            config.encoder_hidden = split_dims(value);
        } else if (key == "decoder_hidden") {
            config.decoder_hidden = split_dims(value);
        } else {
            throw FormatError("checkpoint config: unknown key '" + key + "'");
        }
    }
    return config;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open checkpoint for writing: " + path);
    }
    write_bytes(out, kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kVersion);

    const std::string config_text = serialize_model_config(checkpoint.config);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config_text.size()));
    write_bytes(out, config_text.data(), config_text.size());

    write_pod<std::uint8_t>(out, checkpoint.train_state.present ? 1 : 0);
    if (checkpoint.train_state.present) {
        write_pod<std::uint64_t>(out, checkpoint.train_state.epochs_done);
        write_pod<std::uint64_t>(out, checkpoint.train_state.shuffle_state);
        write_pod<std::uint64_t>(out, checkpoint.train_state.groups_state);
        write_pod<std::uint64_t>(out, checkpoint.train_state.noise_state);
    }

    const std::uint32_t network_count = checkpoint.config.kind == ModelKind::vae ? 2 : 1;
    write_pod<std::uint32_t>(out, network_count);
    write_network(out, checkpoint.params.encoder);
    if (network_count == 2) {
        write_network(out, checkpoint.params.decoder);
    }
    if (!out) {
        throw FormatError("failed writing checkpoint: " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open checkpoint: " + path);
    }
    char magic[4];
    read_bytes(in, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a GENC checkpoint: " + path);
    }
    const std::uint32_t version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }

    Checkpoint checkpoint;
    const std::uint32_t config_len = read_pod<std::uint32_t>(in, "config length");
    std::string config_text(config_len, '\0');
    read_bytes(in, config_text.data(), config_len, "config block");
    checkpoint.config = parse_model_config(config_text);

    const std::uint8_t has_state = read_pod<std::uint8_t>(in, "train state flag");
    if (has_state != 0) {
        checkpoint.train_state.present = true;
        checkpoint.train_state.epochs_done = read_pod<std::uint64_t>(in, "epoch counter");
        checkpoint.train_state.shuffle_state = read_pod<std::uint64_t>(in, "rng state");
        checkpoint.train_state.groups_state = read_pod<std::uint64_t>(in, "rng state");
        checkpoint.train_state.noise_state = read_pod<std::uint64_t>(in, "rng state");
    }

    const std::uint32_t network_count = read_pod<std::uint32_t>(in, "network count");
    const std::uint32_t expected = checkpoint.config.kind == ModelKind::vae ? 2 : 1;
    if (network_count != expected) {
        throw FormatError("checkpoint network count does not match model kind");
    }
    checkpoint.params.encoder = read_network(in);
    if (network_count == 2) {
        checkpoint.params.decoder = read_network(in);
    }
    return checkpoint;
}

} // namespace groupenc
