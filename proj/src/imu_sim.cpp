#include "tepinn/imu_sim.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tepinn/error.hpp"
#include "tepinn/io_util.hpp"

namespace tepinn {

namespace {

using nlohmann::json;

constexpr std::array<double, 3> kSineWeights{1.0, 0.8, 0.6};
constexpr std::array<double, 3> kSineFreqMultipliers{1.0, 0.7, 1.3};
constexpr std::array<double, 3> kSinePhases{0.0, 1.0, 2.0};
constexpr double kRandomWalkDamping = 0.5;

struct SineCommand {
    double amplitude;
    double frequency;

    Vec3 omega(double t) const {
        Vec3 w;
        for (int i = 0; i < 3; ++i) {
            const double f = 2.0 * std::numbers::pi * frequency * kSineFreqMultipliers[i];
            w[i] = amplitude * kSineWeights[i] * std::sin(f * t + kSinePhases[i]);
        }
        return w;
    }

    Vec3 omega_dot(double t) const {
        Vec3 w;
        for (int i = 0; i < 3; ++i) {
            const double f = 2.0 * std::numbers::pi * frequency * kSineFreqMultipliers[i];
            w[i] = amplitude * kSineWeights[i] * f * std::cos(f * t + kSinePhases[i]);
        }
        return w;
    }
};

json vec_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }
json mat_json(const Mat3& m) { return json(std::vector<double>(m.m.begin(), m.m.end())); }

Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Mat3 mat_from(const json& j) {
    Mat3 m;
    if (j.size() != 9) throw Error(ErrorKind::Parse, "3x3 matrix needs 9 entries");
    for (std::size_t i = 0; i < 9; ++i) m.m[i] = j.at(i).get<double>();
    return m;
}

json noise_json(const NoiseSpec& n) {
    return json{{"gyro_noise_std", n.gyro_noise_std}, {"accel_noise_std", n.accel_noise_std},
                {"gyro_bias", vec_json(n.gyro_bias)},   {"accel_bias", vec_json(n.accel_bias)},
                {"gyro_scale", mat_json(n.gyro_scale)}, {"accel_scale", mat_json(n.accel_scale)},
                {"sample_rate", n.sample_rate}};
}

NoiseSpec noise_from(const json& j) {
    NoiseSpec n;
    n.gyro_noise_std = j.at("gyro_noise_std").get<double>();
    n.accel_noise_std = j.at("accel_noise_std").get<double>();
    n.gyro_bias = vec_from(j.at("gyro_bias"));
    n.accel_bias = vec_from(j.at("accel_bias"));
    n.gyro_scale = mat_from(j.at("gyro_scale"));
    n.accel_scale = mat_from(j.at("accel_scale"));
    n.sample_rate = j.at("sample_rate").get<double>();
    return n;
}

std::string normalize_name(std::string name) {
    for (char& c : name)
        if (c == '_') c = '-';
    return name;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

NoiseSpec NoiseSpec::preset(const std::string& name, double sample_rate) {
    double g = 0.0, a = 0.0;
    if (name == "low") {
        g = 0.001;
        a = 0.01;
    } else if (name == "mid") {
        g = 0.01;
        a = 0.1;
    } else if (name == "high") {
        g = 0.05;
        a = 0.5;
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown noise preset '" + name + "'");
    }
    NoiseSpec n;
    n.gyro_noise_std = g;
    n.accel_noise_std = a;
    // biases scale with the noise level
    n.gyro_bias = Vec3{0.5, -0.3, 0.4} * g;
    n.accel_bias = Vec3{0.5, -0.3, 0.4} * a;
    n.sample_rate = sample_rate;
    return n;
}

void NoiseSpec::validate() const {
    if (!(gyro_noise_std >= 0.0) || !(accel_noise_std >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "noise standard deviations must be nonnegative");
    }
    if (!(sample_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample rate must be positive");
}

std::string profile_name(const MotionProfile& profile) {
    struct Visitor {
        std::string operator()(const StaticProfile&) const { return "static"; }
        std::string operator()(const ConstantRateProfile&) const { return "constant-rate"; }
        std::string operator()(const SinusoidalProfile&) const { return "sinusoidal"; }
        std::string operator()(const RandomWalkProfile&) const { return "random-walk"; }
    };
    return std::visit(Visitor{}, profile);
}

MotionProfile make_profile(const std::string& name, const std::vector<double>& params) {
    const std::string n = normalize_name(name);
    auto param = [&](std::size_t i, double fallback) { return i < params.size() ? params[i] : fallback; };
    if (n == "static") return StaticProfile{};
    if (n == "constant-rate") return ConstantRateProfile{{param(0, 0.0), param(1, 0.0), param(2, std::numbers::pi / 2)}};
    if (n == "sinusoidal") return SinusoidalProfile{param(0, 1.0), param(1, 0.5)};
    if (n == "random-walk") return RandomWalkProfile{param(0, 0.5)};
    throw Error(ErrorKind::UnknownProfile, "unknown motion profile '" + name + "'");
}

Trajectory generate_trajectory(const MotionProfile& profile, double duration, double rate, std::uint64_t seed,
                               const SimOptions& options) {
    if (!(duration > 0.0) || !(rate > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "duration and rate must be positive");
    }
    const double dt = 1.0 / rate;
    const auto steps = static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
    const InertiaFactor& inertia = options.inertia;

    Trajectory traj;
    traj.meta.profile = profile_name(profile);
    traj.meta.duration = duration;
    traj.meta.rate = rate;
    traj.meta.seed = seed;
    traj.meta.noise.sample_rate = rate;

    BodyState state;
    state.q = normalize(options.initial_attitude);
    TorqueFn torque = [](double, const BodyState&) { return Vec3{}; };
    Vec3 walk_torque{};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double walk_sigma = 0.0;

    if (const auto* c = std::get_if<ConstantRateProfile>(&profile)) {
        state.omega = c->omega;
        traj.meta.profile_params = {c->omega.x, c->omega.y, c->omega.z};
        // torque that holds ω constant for any inertia
        torque = [&inertia](double, const BodyState& s) { return cross(s.omega, inertia.apply(s.omega)); };
    } else if (const auto* s = std::get_if<SinusoidalProfile>(&profile)) {
        const SineCommand cmd{s->amplitude, s->frequency};
        traj.meta.profile_params = {s->amplitude, s->frequency};
        state.omega = cmd.omega(0.0);
        torque = [cmd, &inertia](double t, const BodyState& st) {
            return inertia.apply(cmd.omega_dot(t)) + cross(st.omega, inertia.apply(st.omega));
        };
    } else if (const auto* r = std::get_if<RandomWalkProfile>(&profile)) {
        walk_sigma = r->sigma;
        traj.meta.profile_params = {r->sigma};
        torque = [&walk_torque](double, const BodyState& st) { return walk_torque - kRandomWalkDamping * st.omega; };
    }

    traj.truth_q.reserve(steps + 1);
    traj.truth_omega.reserve(steps + 1);
    traj.samples.reserve(steps + 1);
    double peak = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        traj.truth_q.push_back(state.q);
        traj.truth_omega.push_back(state.omega);
        traj.samples.push_back({t, {}, {}});
        peak = std::max(peak, norm(state.omega));
        if (i == steps) break;
        if (walk_sigma > 0.0) {
            const double step = walk_sigma * std::sqrt(dt);
            walk_torque += Vec3{gauss(rng), gauss(rng), gauss(rng)} * step;
        }
        state = rk4_step(state, inertia, torque, t, dt);
    }
    traj.meta.peak_angular_velocity = peak;
    return traj;
}

Trajectory synthesize_measurements(const Trajectory& truth, const NoiseSpec& noise, std::uint64_t seed) {
    noise.validate();
    Trajectory out = truth;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](double std) {
        // consume the stream even at zero std so noise levels share sample paths
        const Vec3 n{gauss(rng), gauss(rng), gauss(rng)};
        return n * std;
    };
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Vec3 w = truth.truth_omega[i];
        const Vec3 g = gravity_in_body(truth.truth_q[i], kGravity);
        const Vec3 eta_g = draw(noise.gyro_noise_std);
        const Vec3 eta_a = draw(noise.accel_noise_std);
        out.samples[i].gyro = w + noise.gyro_scale * w + noise.gyro_bias + eta_g;
        out.samples[i].accel = g + noise.accel_scale * g + noise.accel_bias + eta_a;
    }
    out.meta.noise = noise;
    out.meta.noise_seed = seed;
    out.meta.has_measurements = true;
    return out;
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

void write_dataset(const Trajectory& traj, const std::filesystem::path& path) {
    if (traj.samples.size() != traj.truth_q.size() || traj.truth_q.size() != traj.truth_omega.size()) {
        throw Error(ErrorKind::LengthMismatch, "trajectory fields have different lengths");
    }
    std::string csv = kDatasetHeader;
    csv += '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const ImuSample& s = traj.samples[i];
        const Quaternion& q = traj.truth_q[i];
        const Vec3& w = traj.truth_omega[i];
        const double row[14] = {s.t,     s.gyro.x, s.gyro.y, s.gyro.z, s.accel.x, s.accel.y, s.accel.z,
                                q.w,     q.x,      q.y,      q.z,      w.x,       w.y,       w.z};
        for (int k = 0; k < 14; ++k) {
            if (k) csv += ',';
            csv += format_double(row[k]);
        }
        csv += '\n';
    }

    const TrajectoryMeta& m = traj.meta;
    json meta{{"format_version", 1},
              {"profile", m.profile},
              {"profile_params", m.profile_params},
              {"duration", m.duration},
              {"rate", m.rate},
              {"seed", m.seed},
              {"peak_angular_velocity", m.peak_angular_velocity},
              {"has_measurements", m.has_measurements},
              {"noise", noise_json(m.noise)},
              {"noise_seed", m.noise_seed}};

    write_file_atomic(path, csv);
    write_file_atomic(meta_path_for(path), meta.dump(2) + "\n");
}

Trajectory read_dataset(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    Trajectory traj;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool last_terminated = true;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t end = text.find('\n', pos);
        const bool terminated = end != std::string::npos;
        if (!terminated) end = text.size();
        line = std::string_view(text).substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = terminated ? end + 1 : end;
        last_terminated = terminated;
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line) || line != kDatasetHeader) parse_error(1, "missing or malformed header");

    while (next_line(line)) {
        if (line.empty()) {
            if (pos >= text.size()) break;
            parse_error(line_no, "empty row");
        }
        double v[14];
        std::size_t field = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view tok = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
            if (field >= 14) parse_error(line_no, "too many fields");
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v[field]);
            if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
                parse_error(line_no, "bad number '" + std::string(tok) + "'");
            }
            ++field;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (field != 14) parse_error(line_no, "expected 14 fields, got " + std::to_string(field));
        if (!last_terminated) parse_error(line_no, "truncated row (missing line feed)");
        if (!traj.samples.empty() && !(v[0] > traj.samples.back().t)) {
            parse_error(line_no, "timestamps must be strictly increasing");
        }
        traj.samples.push_back({v[0], {v[1], v[2], v[3]}, {v[4], v[5], v[6]}});
        const Quaternion q{v[7], v[8], v[9], v[10]};
        if (std::abs(norm(q) - 1.0) > 1e-6) parse_error(line_no, "truth quaternion is not unit");
        traj.truth_q.push_back(q);
        traj.truth_omega.push_back({v[11], v[12], v[13]});
    }

    const auto meta_path = meta_path_for(path);
    if (std::filesystem::exists(meta_path)) {
        try {
            const json j = json::parse(read_file(meta_path));
            TrajectoryMeta& m = traj.meta;
            m.profile = j.at("profile").get<std::string>();
            m.profile_params = j.at("profile_params").get<std::vector<double>>();
            m.duration = j.at("duration").get<double>();
            m.rate = j.at("rate").get<double>();
            m.seed = j.at("seed").get<std::uint64_t>();
            m.peak_angular_velocity = j.at("peak_angular_velocity").get<double>();
            m.has_measurements = j.at("has_measurements").get<bool>();
            m.noise = noise_from(j.at("noise"));
            m.noise_seed = j.at("noise_seed").get<std::uint64_t>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, meta_path.string() + ": " + e.what());
        }
    } else {
        traj.meta.has_measurements = true;
        if (traj.samples.size() >= 2) traj.meta.rate = 1.0 / (traj.samples[1].t - traj.samples[0].t);
    }
    return traj;
}

}  // namespace tepinn
