#include "tepinn/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "tepinn/error.hpp"
#include "tepinn/io_util.hpp"

namespace tepinn {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Field {
    std::string section;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

double to_double(std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw Error(ErrorKind::Parse, "expected a number, got '" + std::string(v) + "'");
    return out;
}

std::uint64_t to_uint(std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw Error(ErrorKind::Parse, "expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
}

bool to_bool(std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw Error(ErrorKind::Parse, "expected true or false, got '" + std::string(v) + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

#define TEPINN_UINT(section, key, member)                                                               \
    {                                                                                                   \
        key, Field {                                                                                    \
            section, [](RunConfig& c, std::string_view v) { c.member = static_cast<decltype(c.member)>(to_uint(v)); }, \
                [](const RunConfig& c) { return std::to_string(c.member); }                             \
        }                                                                                               \
    }
#define TEPINN_REAL(section, key, member)                                                  \
    {                                                                                      \
        key, Field {                                                                       \
            section, [](RunConfig& c, std::string_view v) { c.member = to_double(v); },    \
                [](const RunConfig& c) { return format_double(c.member); }                 \
        }                                                                                  \
    }
#define TEPINN_BOOL(section, key, member)                                                  \
    {                                                                                      \
        key, Field {                                                                       \
            section, [](RunConfig& c, std::string_view v) { c.member = to_bool(v); },      \
                [](const RunConfig& c) { return from_bool(c.member); }                     \
        }                                                                                  \
    }

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        TEPINN_UINT("encoder", "d_model", encoder.d_model),
        TEPINN_UINT("encoder", "n_layers", encoder.n_layers),
        TEPINN_UINT("encoder", "n_heads", encoder.n_heads),
        TEPINN_UINT("encoder", "d_ff", encoder.d_ff),
        TEPINN_UINT("encoder", "window_len", encoder.window_len),
        TEPINN_REAL("encoder", "dropout", encoder.dropout_rate),
        TEPINN_BOOL("encoder", "attitude_correction", encoder.attitude_correction),
        TEPINN_UINT("encoder", "init_seed", init_seed),
        TEPINN_UINT("train", "epochs", train.epochs),
        TEPINN_UINT("train", "batch_size", train.batch_size),
        TEPINN_REAL("train", "lr_network", train.lr_network),
        TEPINN_REAL("train", "lr_physics", train.lr_physics),
        TEPINN_REAL("train", "lr_decay", train.lr_decay),
        TEPINN_UINT("train", "seed", train.seed),
        TEPINN_REAL("train", "grad_clip", train.grad_clip),
        TEPINN_UINT("train", "log_every", train.log_every),
        TEPINN_REAL("train", "physics_warmup", train.physics_warmup),
        TEPINN_UINT("train", "physics_span", train.physics_span),
        TEPINN_BOOL("train", "fix_inertia_scale", train.fix_inertia_scale),
        TEPINN_REAL("loss", "lambda_acc", weights.acc),
        TEPINN_REAL("loss", "lambda_gyro", weights.gyro),
        TEPINN_REAL("loss", "lambda_dynamics", weights.dynamics),
        TEPINN_REAL("loss", "lambda_wd", weights.weight_decay),
    };
    return table;
}

#undef TEPINN_UINT
#undef TEPINN_REAL
#undef TEPINN_BOOL

}  // namespace

void RunConfig::validate() const {
    encoder.validate();
    train.validate();
    weights.validate();
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::string section;
    std::map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorKind::Parse, where + "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "encoder" && section != "train" && section != "loss") {
                throw Error(ErrorKind::Parse, where + "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorKind::Parse, where + "expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
        if (it == table.end()) throw Error(ErrorKind::Parse, where + "unknown key '" + key + "'");
        if (!section.empty() && it->second.section != section) {
            throw Error(ErrorKind::Parse, where + "key '" + key + "' does not belong in [" + section + "]");
        }
        if (const auto prev = seen.find(key); prev != seen.end()) {
            throw Error(ErrorKind::Parse, where + "duplicate key '" + key + "' (first on line " + std::to_string(prev->second) + ")");
        }
        seen[key] = line_no;
        try {
            it->second.set(cfg, value);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, where + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string format_config(const RunConfig& c) {
    std::ostringstream out;
    std::string section;
    for (const auto& [key, field] : fields()) {
        if (field.section != section) {
            if (!section.empty()) out << "\n";
            section = field.section;
            out << "[" << section << "]\n";
        }
        out << key << " = " << field.get(c) << "\n";
    }
    return out.str();
}

}  // namespace tepinn
