#include "tepinn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <json.hpp>

#include "tepinn/error.hpp"
#include "tepinn/io_util.hpp"

namespace tepinn {

using ad::Tensor;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'E', 'P', 'I', 'N', 'N', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw Error(ErrorKind::Parse, "checkpoint truncated");
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

json encoder_json(const EncoderConfig& c) {
    return {{"d_model", c.d_model},   {"n_layers", c.n_layers},         {"n_heads", c.n_heads},
            {"d_ff", c.d_ff},         {"window_len", c.window_len},     {"dropout_rate", c.dropout_rate},
            {"attitude_correction", c.attitude_correction}};
}

EncoderConfig encoder_from(const json& j) {
    EncoderConfig c;
    c.d_model = j.at("d_model");
    c.n_layers = j.at("n_layers");
    c.n_heads = j.at("n_heads");
    c.d_ff = j.at("d_ff");
    c.window_len = j.at("window_len");
    c.dropout_rate = j.at("dropout_rate");
    c.attitude_correction = j.at("attitude_correction");
    return c;
}

json train_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr_network", c.lr_network},
            {"lr_physics", c.lr_physics},
            {"lr_decay", c.lr_decay},
            {"seed", c.seed},
            {"grad_clip", c.grad_clip},
            {"log_every", c.log_every},
            {"physics_warmup", c.physics_warmup},
            {"physics_span", c.physics_span},
            {"fix_inertia_scale", c.fix_inertia_scale}};
}

TrainConfig train_from(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs");
    c.batch_size = j.at("batch_size");
    c.lr_network = j.at("lr_network");
    c.lr_physics = j.at("lr_physics");
    c.lr_decay = j.at("lr_decay");
    c.seed = j.at("seed");
    c.grad_clip = j.at("grad_clip");
    c.log_every = j.at("log_every");
    c.physics_warmup = j.at("physics_warmup");
    c.physics_span = j.at("physics_span");
    c.fix_inertia_scale = j.at("fix_inertia_scale");
    return c;
}

json weights_json(const LossWeights& w) {
    return {{"acc", w.acc}, {"gyro", w.gyro}, {"dynamics", w.dynamics}, {"weight_decay", w.weight_decay}};
}

LossWeights weights_from(const json& j) {
    return {j.at("acc").get<double>(), j.at("gyro").get<double>(), j.at("dynamics").get<double>(),
            j.at("weight_decay").get<double>()};
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
    json table = json::array();
    std::vector<const Tensor*> payload;
    std::size_t offset = 0;
    auto add = [&](const std::string& name, const Tensor& t) {
        table.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        payload.push_back(&t);
        offset += t.size();
    };
    const auto params = ck.model.all();
    for (const ad::Parameter* p : params) add(p->name, p->value);
    const bool has_moments = !ck.optimizer.m.empty();
    if (has_moments) {
        if (ck.optimizer.m.size() != params.size() || ck.optimizer.v.size() != params.size()) {
            throw Error(ErrorKind::ShapeMismatch, "optimizer state does not match the model");
        }
        for (std::size_t i = 0; i < params.size(); ++i) add("adam.m/" + params[i]->name, ck.optimizer.m[i]);
        for (std::size_t i = 0; i < params.size(); ++i) add("adam.v/" + params[i]->name, ck.optimizer.v[i]);
    }

    const json header = {{"format", "tepinn-checkpoint"},
                         {"encoder", encoder_json(ck.model.encoder.config())},
                         {"train", train_json(ck.train)},
                         {"weights", weights_json(ck.weights)},
                         {"init_seed", ck.init_seed},
                         {"progress",
                          {{"optimizer_step", ck.optimizer.step},
                           {"epoch", ck.epoch},
                           {"step_in_epoch", ck.step_in_epoch},
                           {"has_moments", has_moments}}},
                         {"tensors", table},
                         {"payload_doubles", offset}};
    const std::string text = header.dump();

    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out += text;
    out.reserve(out.size() + offset * sizeof(double));
    for (const Tensor* t : payload)
        out.append(reinterpret_cast<const char*>(t->ptr()), t->size() * sizeof(double));
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw Error(ErrorKind::Parse, "not a checkpoint file (bad magic)");
    }
    std::size_t pos = sizeof(kMagic);
    const auto version = take<std::uint32_t>(bytes, pos);
    if (version != kCheckpointVersion) {
        throw Error(ErrorKind::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                    ", expected " + std::to_string(kCheckpointVersion));
    }
    const auto header_len = take<std::uint64_t>(bytes, pos);
    if (pos + header_len > bytes.size()) throw Error(ErrorKind::Parse, "checkpoint header truncated");

    json header;
    try {
        header = json::parse(bytes.substr(pos, header_len));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("checkpoint header: ") + e.what());
    }
    pos += header_len;

    try {
        const std::size_t n_doubles = header.at("payload_doubles");
        if (bytes.size() - pos != n_doubles * sizeof(double)) {
            throw Error(ErrorKind::Parse, "checkpoint payload size mismatch");
        }
        std::vector<double> payload(n_doubles);
        std::memcpy(payload.data(), bytes.data() + pos, n_doubles * sizeof(double));
        const double* base = payload.data();

        Checkpoint ck;
        ck.init_seed = header.at("init_seed");
        ck.model = ModelParams(encoder_from(header.at("encoder")), ck.init_seed);
        ck.train = train_from(header.at("train"));
        ck.weights = weights_from(header.at("weights"));
        const json& progress = header.at("progress");
        ck.optimizer.step = progress.at("optimizer_step");
        ck.epoch = progress.at("epoch");
        ck.step_in_epoch = progress.at("step_in_epoch");
        const bool has_moments = progress.at("has_moments");

        std::map<std::string, Tensor> tensors;
        for (const json& entry : header.at("tensors")) {
            const ad::Shape shape = entry.at("shape").get<ad::Shape>();
            const std::size_t offset = entry.at("offset");
            std::size_t count = 1;
            for (std::size_t d : shape) count *= d;
            if (shape.empty() || shape.size() > 2 || offset + count > n_doubles) {
                throw Error(ErrorKind::Parse, "bad tensor table entry");
            }
            tensors[entry.at("name")] = Tensor(shape, std::vector<double>(base + offset, base + offset + count));
        }
        auto fetch = [&](const std::string& name, const ad::Shape& expected) {
            const auto it = tensors.find(name);
            if (it == tensors.end()) throw Error(ErrorKind::Parse, "checkpoint is missing tensor " + name);
            if (it->second.shape() != expected) {
                throw Error(ErrorKind::ShapeMismatch, "tensor " + name + " has shape " + ad::shape_string(it->second.shape()) +
                                                          ", expected " + ad::shape_string(expected));
            }
            return it->second;
        };
        const auto params = ck.model.all();
        for (ad::Parameter* p : params) {
            p->value = fetch(p->name, p->value.shape());
            p->zero_grad();
        }
        if (has_moments) {
            for (const ad::Parameter* p : params) ck.optimizer.m.push_back(fetch("adam.m/" + p->name, p->value.shape()));
            for (const ad::Parameter* p : params) ck.optimizer.v.push_back(fetch("adam.v/" + p->name, p->value.shape()));
        }
        return ck;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("checkpoint header: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace tepinn
