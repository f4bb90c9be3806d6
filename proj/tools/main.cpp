// tepinn command-line front end. Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "tepinn/error.hpp"

using namespace tepinn::cli;

int main(int argc, char** argv) {
    CLI::App app{"Transformer-based physics-informed attitude estimation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    const std::vector<std::string> estimator_names{"tepinn", "tepinn-nophys", "ekf"};
    const std::vector<std::string> modes{"tilt", "full"};

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic IMU dataset (CSV + meta sidecar)");
    simulate->add_option("--profile", sim.profile, "Motion profile")
        ->required()
        ->check(CLI::IsMember({"static", "constant-rate", "sinusoidal", "random-walk"}));
    simulate->add_option("--params", sim.params,
                         "Profile parameters: constant-rate wx wy wz | sinusoidal amplitude frequency | random-walk sigma");
    simulate->add_option("--duration", sim.duration, "Seconds")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--rate", sim.rate, "Sample rate, Hz")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--noise-preset", sim.noise_preset, "Noise preset; explicit flags override its fields")
        ->check(CLI::IsMember({"low", "mid", "high"}));
    simulate->add_option("--gyro-std", sim.gyro_std, "Gyro white-noise std, rad/s")->check(CLI::NonNegativeNumber);
    simulate->add_option("--accel-std", sim.accel_std, "Accel white-noise std, m/s^2")->check(CLI::NonNegativeNumber);
    simulate->add_option("--gyro-bias", sim.gyro_bias, "Gyro bias x y z, rad/s")->expected(3);
    simulate->add_option("--accel-bias", sim.accel_bias, "Accel bias x y z, m/s^2")->expected(3);
    simulate->add_option("--seed", sim.seed, "Trajectory seed")->capture_default_str();
    simulate->add_option("--noise-seed", sim.noise_seed, "Measurement noise seed (default: seed + 1)");
    simulate->add_option("--out", sim.out, "Output CSV path")->required();

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "Train a model and write a checkpoint plus metrics CSVs");
    train->add_option("--data", tr.data, "Dataset CSV glob(s)")->required();
    train->add_option("--config", tr.config, "Run configuration file")->check(CLI::ExistingFile);
    train->add_option("--out", tr.out, "Checkpoint path")->required();
    train->add_option("--resume", tr.resume, "Resume from this checkpoint")->check(CLI::ExistingFile);
    train->add_option("--metrics", tr.metrics, "Per-epoch CSV (default: <out stem>.metrics.csv)");
    train->add_option("--step-log", tr.step_log, "Per-step CSV (default: <out stem>.steps.csv)");
    train->add_option("--stop-after", tr.stop_after, "Stop after this many epochs in this invocation");
    train->add_flag("--wall-time", tr.wall_time, "Record wall-clock seconds (otherwise 0, keeping the CSV reproducible)");
    train->add_flag("--quiet", tr.quiet, "No progress output");

    EvalOptions ev;
    auto* eval = app.add_subcommand("eval", "Score estimators against ground truth");
    eval->add_option("--data", ev.data, "Dataset CSV glob(s)")->required();
    eval->add_option("--estimator", ev.estimators, "Estimator(s), repeatable")
        ->capture_default_str()
        ->check(CLI::IsMember(estimator_names));
    eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint for tepinn")->check(CLI::ExistingFile);
    eval->add_option("--checkpoint-nophys", ev.checkpoint_nophys, "Checkpoint for tepinn-nophys")->check(CLI::ExistingFile);
    eval->add_option("--report", ev.report, "Metrics CSV path")->required();
    eval->add_option("--plots", ev.plots, "Directory for SVG plots and per-sample traces");
    eval->add_option("--error-mode", ev.error_mode, "tilt: yaw-free comparison; full: raw quaternions")
        ->capture_default_str()
        ->check(CLI::IsMember(modes));

    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "Factorial noise or angular-velocity sweep");
    sweep->add_option("--axis", sw.axis, "Sweep axis")->required()->check(CLI::IsMember({"noise", "angular-velocity"}));
    sweep->add_option("--levels", sw.levels, "Gyro noise std (noise) or sinusoid amplitude (angular-velocity)")
        ->required()
        ->delimiter(',');
    sweep->add_option("--estimators", sw.estimators, "Estimators")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::IsMember(estimator_names));
    sweep->add_option("--seeds", sw.seeds, "Seeds")->delimiter(',')->capture_default_str();
    sweep->add_option("--out", sw.out, "Output directory")->required();
    sweep->add_option("--checkpoint", sw.checkpoint, "Checkpoint for tepinn")->check(CLI::ExistingFile);
    sweep->add_option("--checkpoint-nophys", sw.checkpoint_nophys, "Checkpoint for tepinn-nophys")->check(CLI::ExistingFile);
    sweep->add_option("--duration", sw.duration, "Seconds per trajectory")->capture_default_str()->check(CLI::PositiveNumber);
    sweep->add_option("--rate", sw.rate, "Sample rate, Hz")->capture_default_str()->check(CLI::PositiveNumber);
    sweep->add_option("--error-mode", sw.error_mode, "tilt or full")->capture_default_str()->check(CLI::IsMember(modes));

    AblateOptions ab;
    auto* ablate = app.add_subcommand("ablate", "Train full, physics-off and correction-off arms under identical seeds");
    ablate->add_option("--data", ab.data, "Training dataset glob(s)")->required();
    ablate->add_option("--config", ab.config, "Run configuration file")->check(CLI::ExistingFile);
    ablate->add_option("--eval-data", ab.eval_data, "Evaluation dataset glob(s) (default: the training data)");
    ablate->add_option("--seeds", ab.seeds, "Seeds (default: the config's train seed)")->delimiter(',');
    ablate->add_option("--out", ab.out, "Output directory")->capture_default_str();
    ablate->add_option("--error-mode", ab.error_mode, "tilt or full")->capture_default_str()->check(CLI::IsMember(modes));
    ablate->add_flag("--quiet", ab.quiet, "No progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*train) return run_train(tr);
        if (*eval) return run_eval(ev);
        if (*sweep) return run_sweep(sw);
        if (*ablate) return run_ablate(ab);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const tepinn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const bool usage = e.kind() == tepinn::ErrorKind::InvalidArgument || e.kind() == tepinn::ErrorKind::UnknownProfile;
        return usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
