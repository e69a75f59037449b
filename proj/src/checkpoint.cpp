#include "dtn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dtn/errors.hpp"

namespace dtn {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'N', 'C'};

// Fixed-width little-endian writers; the format is defined as LE on disk.
template <typename T>
void put(std::string& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
}

void put_f64(std::string& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    put(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > buf.size()) {
            throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
        }
    }
    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        }
        pos += sizeof(T);
        return static_cast<T>(v);
    }
    double get_f64(const char* what) {
        const std::uint64_t bits = get<std::uint64_t>(what);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string get_bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::string encode_array(const Checkpoint::Array& arr) {
    std::string payload;
    put<std::uint32_t>(payload, static_cast<std::uint32_t>(arr.shape.size()));
    for (std::size_t d : arr.shape) put<std::uint64_t>(payload, d);
    for (double v : arr.values) put_f64(payload, v);
    return payload;
}

Checkpoint::Array decode_array(const std::string& payload, const std::string& name) {
    Reader r{payload};
    Checkpoint::Array arr;
    const auto rank = r.get<std::uint32_t>("array rank");
    for (std::uint32_t i = 0; i < rank; ++i) {
        arr.shape.push_back(r.get<std::uint64_t>("array dims"));
    }
    const std::size_t count = shape_size(arr.shape);
    arr.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) arr.values.push_back(r.get_f64("array values"));
    if (r.pos != payload.size()) {
        throw CheckpointError("checkpoint array '" + name + "' has trailing bytes");
    }
    return arr;
}

void append_section(std::string& out, const std::string& name, const std::string& payload) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, payload.size());
    out += payload;
}

std::string u64_payload(std::uint64_t v) {
    std::string s;
    put(s, v);
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, Checkpoint::kVersion);

    std::vector<std::pair<std::string, std::string>> sections;
    sections.emplace_back("schedule", ckpt.schedule_string);
    sections.emplace_back("config", ckpt.config_text);
    sections.emplace_back("epoch", u64_payload(ckpt.next_epoch));
    sections.emplace_back("step", u64_payload(ckpt.step_count));
    for (const auto& [name, state] : ckpt.rng_states) {
        sections.emplace_back("rng:" + name, state);
    }
    for (const auto& [name, arr] : ckpt.params) {
        sections.emplace_back("p:" + name, encode_array(arr));
    }
    for (const auto& [name, arr] : ckpt.velocities) {
        sections.emplace_back("v:" + name, encode_array(arr));
    }

    put<std::uint64_t>(out, sections.size());
    for (const auto& [name, payload] : sections) append_section(out, name, payload);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("save_checkpoint: cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("save_checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("load_checkpoint: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();

    Reader r{buf};
    const std::string magic = r.get_bytes(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) {
        throw CheckpointError("load_checkpoint: '" + path + "' is not a checkpoint file");
    }
    const auto version = r.get<std::uint32_t>("version");
    if (version != Checkpoint::kVersion) {
        throw CheckpointError("load_checkpoint: format version " + std::to_string(version) +
                              " unsupported (this build reads version " +
                              std::to_string(Checkpoint::kVersion) + ")");
    }

    Checkpoint ckpt;
    const auto n_sections = r.get<std::uint64_t>("section count");
    for (std::uint64_t s = 0; s < n_sections; ++s) {
        const auto name_len = r.get<std::uint32_t>("section name length");
        const std::string name = r.get_bytes(name_len, "section name");
        const auto payload_len = r.get<std::uint64_t>("section length");
        const std::string payload = r.get_bytes(payload_len, ("section '" + name + "'").c_str());

        if (name == "schedule") {
            ckpt.schedule_string = payload;
        } else if (name == "config") {
            ckpt.config_text = payload;
        } else if (name == "epoch") {
            Reader pr{payload};
            ckpt.next_epoch = pr.get<std::uint64_t>("epoch");
        } else if (name == "step") {
            Reader pr{payload};
            ckpt.step_count = pr.get<std::uint64_t>("step");
        } else if (name.rfind("rng:", 0) == 0) {
            ckpt.rng_states.emplace_back(name.substr(4), payload);
        } else if (name.rfind("p:", 0) == 0) {
            ckpt.params.emplace_back(name.substr(2), decode_array(payload, name));
        } else if (name.rfind("v:", 0) == 0) {
            ckpt.velocities.emplace_back(name.substr(2), decode_array(payload, name));
        } else {
            throw CheckpointError("load_checkpoint: unknown section '" + name + "'");
        }
    }
    if (r.pos != buf.size()) {
        throw CheckpointError("load_checkpoint: trailing bytes after last section");
    }
    return ckpt;
}

Checkpoint checkpoint_from_model(const ModelState& state) {
    Checkpoint ckpt;
    ckpt.step_count = state.step_count;
    ckpt.config_text = model_config_text(state.config);
    for (const auto& [name, tensor] : state.named_parameters()) {
        ckpt.params.emplace_back(name, Checkpoint::Array{tensor.shape(), tensor.values()});
    }
    return ckpt;
}

void restore_model(ModelState& state, const Checkpoint& ckpt) {
    std::map<std::string, const Checkpoint::Array*> by_name;
    for (const auto& [name, arr] : ckpt.params) by_name[name] = &arr;

    for (auto& [name, tensor] : state.named_parameters()) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw CheckpointError("restore_model: checkpoint is missing parameter '" + name + "'");
        }
        if (it->second->shape != tensor.shape()) {
            throw CheckpointError("restore_model: parameter '" + name + "' has shape " +
                                  shape_str(it->second->shape) + ", model expects " +
                                  shape_str(tensor.shape()));
        }
        tensor.values_mut() = it->second->values;  // handles share the model's storage
        tensor.zero_grad();
    }
    state.step_count = ckpt.step_count;
}

std::string model_config_text(const ModelConfig& config) {
    std::ostringstream os;
    os << "model.input_dim=" << config.input_dim << "\n";
    os << "model.hidden_dims=";
    for (std::size_t i = 0; i < config.hidden_dims.size(); ++i) {
        if (i) os << ',';
        os << config.hidden_dims[i];
    }
    os << "\n";
    os << "model.feature_dim=" << config.feature_dim << "\n";
    os << "model.latent_dim=" << config.latent_dim << "\n";
    os << "model.dropout_rate=" << config.dropout_rate << "\n";
    os << "model.leaky_slope=" << config.leaky_slope << "\n";
    os << "model.n_aux_classes=" << config.n_aux_classes << "\n";
    os << "model.alpha_init=" << config.alpha_init << "\n";
    os << "model.aux_normalize_rows=" << (config.aux_normalize_rows ? 1 : 0) << "\n";
    return os.str();
}

ModelConfig model_config_from_text(const std::string& text) {
    ModelConfig config;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "model.input_dim") {
                config.input_dim = std::stoul(value);
            } else if (key == "model.hidden_dims") {
                config.hidden_dims.clear();
                std::istringstream vs(value);
                std::string tok;
                while (std::getline(vs, tok, ',')) {
                    if (!tok.empty()) config.hidden_dims.push_back(std::stoul(tok));
                }
            } else if (key == "model.feature_dim") {
                config.feature_dim = std::stoul(value);
            } else if (key == "model.latent_dim") {
                config.latent_dim = std::stoul(value);
            } else if (key == "model.dropout_rate") {
                config.dropout_rate = std::stod(value);
            } else if (key == "model.leaky_slope") {
                config.leaky_slope = std::stod(value);
            } else if (key == "model.n_aux_classes") {
                config.n_aux_classes = std::stoul(value);
            } else if (key == "model.alpha_init") {
                config.alpha_init = std::stod(value);
            } else if (key == "model.aux_normalize_rows") {
                config.aux_normalize_rows = value != "0";
            }
        } catch (const std::exception&) {
            throw CheckpointError("model config: bad value '" + value + "' for " + key);
        }
    }
    return config;
}

}  // namespace dtn
