#include "tepinn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tepinn/error.hpp"
#include "tepinn/io_util.hpp"

namespace tepinn {

ErrorMode parse_error_mode(const std::string& name) {
    if (name == "tilt") return ErrorMode::Tilt;
    if (name == "full") return ErrorMode::Full;
    throw Error(ErrorKind::InvalidArgument, "error mode must be tilt or full, got '" + name + "'");
}

std::string to_string(ErrorMode mode) { return mode == ErrorMode::Tilt ? "tilt" : "full"; }

double attitude_error(Quaternion q_est, Quaternion q_true) {
    if (q_est == q_true || q_est == -q_true) return 0.0;  // q⁻¹⊗q leaves ~1e-17 of rounding
    const Quaternion d = multiply(conjugate(q_true), q_est);
    const double v = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    return 2.0 * std::atan2(v, std::abs(d.w));
}

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

std::vector<Quaternion> tepinn_estimates(const Trajectory& traj, const EncoderParams& params) {
    const std::size_t n = params.config().window_len;
    std::vector<Quaternion> out;
    if (traj.samples.size() < n) return out;
    out.reserve(traj.samples.size() - n + 1);
    const std::span<const ImuSample> all(traj.samples);
    for (std::size_t end = n; end <= all.size(); ++end) out.push_back(estimate(all.subspan(end - n, n), params));
    return out;
}

std::vector<Quaternion> ekf_estimates(const Trajectory& traj, const EkfConfig& cfg, std::size_t first) {
    if (traj.samples.empty()) return {};
    EkfRun run = run_ekf(traj, cfg);
    if (first >= run.q.size()) return {};
    return {run.q.begin() + static_cast<std::ptrdiff_t>(first), run.q.end()};
}

double rate_percentile(const Trajectory& traj, std::size_t first, double p) {
    std::vector<double> rates;
    for (std::size_t i = first; i < traj.truth_omega.size(); ++i) rates.push_back(norm(traj.truth_omega[i]));
    if (rates.empty()) return 0.0;
    std::sort(rates.begin(), rates.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(rates.size())));
    return rates[std::clamp<std::size_t>(rank, 1, rates.size()) - 1];
}

std::vector<EvalRecord> compare(const Trajectory& traj, std::size_t file, std::span<const Quaternion> estimates,
                                std::size_t first, ErrorMode mode) {
    if (first + estimates.size() > traj.size()) {
        throw Error(ErrorKind::LengthMismatch, "estimates extend past the trajectory");
    }
    const double threshold = rate_percentile(traj, first, 0.75);
    std::vector<EvalRecord> out;
    out.reserve(estimates.size());
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        const std::size_t i = first + k;
        EvalRecord r;
        r.file = file;
        r.index = i;
        r.t = i < traj.samples.size() ? traj.samples[i].t : static_cast<double>(i) / traj.meta.rate;
        r.estimate = estimates[k];
        r.truth = traj.truth_q[i];
        if (mode == ErrorMode::Tilt) {
            r.estimate = attitude_correct(r.estimate);
            r.truth = attitude_correct(r.truth);
        }
        r.estimate = sign_align(r.estimate, r.truth);
        r.estimate_euler = to_euler(estimates[k]);
        r.truth_euler = to_euler(traj.truth_q[i]);
        if (mode == ErrorMode::Tilt) r.estimate_euler.yaw = r.truth_euler.yaw = 0.0;
        r.error = attitude_error(r.estimate, r.truth);
        r.rate = i < traj.truth_omega.size() ? norm(traj.truth_omega[i]) : 0.0;
        r.dynamic = r.rate > threshold;
        out.push_back(r);
    }
    return out;
}

EvalMetrics summarize(const std::string& estimator, std::span<const EvalRecord> records) {
    EvalMetrics m;
    m.estimator = estimator;
    m.samples = records.size();
    if (records.empty()) return m;
    double err = 0, roll = 0, pitch = 0, yaw = 0, dyn = 0;
    std::size_t n_dyn = 0;
    for (const EvalRecord& r : records) {
        err += r.error;
        const double dr = wrap_angle(r.estimate_euler.roll - r.truth_euler.roll);
        const double dp = wrap_angle(r.estimate_euler.pitch - r.truth_euler.pitch);
        const double dy = wrap_angle(r.estimate_euler.yaw - r.truth_euler.yaw);
        roll += dr * dr;
        pitch += dp * dp;
        yaw += dy * dy;
        if (r.dynamic) {
            dyn += r.error;
            ++n_dyn;
        }
    }
    const double n = static_cast<double>(records.size());
    m.mean_geodesic = err / n;
    m.rmse_roll = std::sqrt(roll / n);
    m.rmse_pitch = std::sqrt(pitch / n);
    m.rmse_yaw = std::sqrt(yaw / n);
    m.dynamic_error = n_dyn > 0 ? dyn / static_cast<double>(n_dyn) : m.mean_geodesic;
    return m;
}

std::string report_csv(std::span<const EvalMetrics> rows) {
    std::ostringstream out;
    out << kReportHeader << "\n";
    for (const EvalMetrics& m : rows) {
        out << m.estimator << ',' << m.samples << ',' << format_double(m.mean_geodesic) << ','
            << format_double(m.rmse_roll) << ',' << format_double(m.rmse_pitch) << ',' << format_double(m.rmse_yaw)
            << ',' << format_double(m.dynamic_error) << "\n";
    }
    return out.str();
}

std::string trace_csv(std::span<const EvalRecord> records) {
    std::ostringstream out;
    out << kTraceHeader << "\n";
    for (const EvalRecord& r : records) {
        out << r.file << ',' << r.index << ',' << format_double(r.t);
        for (const Quaternion& q : {r.estimate, r.truth}) {
            out << ',' << format_double(q.w) << ',' << format_double(q.x) << ',' << format_double(q.y) << ','
                << format_double(q.z);
        }
        for (const EulerAngles& e : {r.estimate_euler, r.truth_euler}) {
            out << ',' << format_double(e.roll) << ',' << format_double(e.pitch) << ',' << format_double(e.yaw);
        }
        out << ',' << format_double(r.error) << ',' << format_double(r.rate) << ',' << (r.dynamic ? 1 : 0) << "\n";
    }
    return out.str();
}

}  // namespace tepinn
