// Command-line experiment driver for the foldable-wing drone simulator.

#include "fsd/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fsd::SimParams load_or_default(const std::string& config_path) {
    if (config_path.empty() || config_path == "default") return fsd::SimParams{};
    return fsd::load_params(config_path);
}

fsd::EstimatorMode parse_controller(const std::string& name) {
    if (name == "wingless") return fsd::EstimatorMode::None;
    if (name == "flat_plate") return fsd::EstimatorMode::FlatPlate;
    if (name == "parnn") return fsd::EstimatorMode::Parnn;
    throw CLI::ValidationError("controller must be wingless, flat_plate or parnn");
}

// Test-log speed envelopes mirror the train/test structure of the
/// aerodynamic evaluation: one faster-than-train set, two comparable, one slow.
struct LogSpec {
    const char* name;
    double max_speed;
    double duration;
};
constexpr LogSpec kCollectSpecs[] = {
    {"train", 8.0, 600.0},
    {"test1", 10.5, 150.0},
    {"test2", 7.5, 150.0},
    {"test3", 8.0, 150.0},
    {"test4", 5.5, 150.0},
};

int cmd_collect(const std::string& config, const std::string& out_dir,
                std::uint64_t seed, double duration_scale) {
    const fsd::SimParams sp = load_or_default(config);
    fs::create_directories(out_dir);
    int i = 0;
    for (const auto& spec : kCollectSpecs) {
        fsd::CollectConfig cfg;
        cfg.seed = seed + 101 * (i++);
        cfg.max_speed = spec.max_speed;
        cfg.duration = spec.duration * duration_scale;
        const fsd::FlightLog log = fsd::collect_training_flight(cfg, sp);
        const std::string path = (fs::path(out_dir) / (std::string(spec.name) + ".csv")).string();
        fsd::write_log_csv(log, path);
        double vmin = 1e9, vmax = 0.0;
        for (const auto& s : log) {
            vmin = std::min(vmin, s.velocity.norm());
            vmax = std::max(vmax, s.velocity.norm());
        }
        std::cout << spec.name << ": " << log.size() << " rows, speed ["
                  << vmin << ", " << vmax << "] m/s -> " << path << '\n';
    }
    return 0;
}

int cmd_train(const std::string& config, const std::string& data,
              const std::string& out_model, const std::string& head_name,
              int episodes, double lr, std::uint64_t seed,
              const std::string& loss_csv) {
    const fsd::SimParams sp = load_or_default(config);
    const fsd::FlightLog log = fsd::read_log_csv(data);
    const auto samples = fsd::build_dataset(log, sp.drone);
    if (samples.empty()) {
        std::cerr << "error: empty dataset from " << data << '\n';
        return 1;
    }
    const fsd::HeadKind head =
        head_name == "vanilla" ? fsd::HeadKind::Vanilla : fsd::HeadKind::Parnn;

    fsd::RnnModel model;
    model.init(8, 8, head == fsd::HeadKind::Parnn ? 2 : 3, seed);
    fsd::fit_normalization(model, samples);

    fsd::TrainConfig cfg;
    cfg.episodes = episodes;
    cfg.learning_rate = lr;
    cfg.seed = seed;

    const fsd::TrainResult result =
        fsd::train_bptt(model, head, samples, sp.drone, cfg);
    fsd::save_model(result.model, out_model);
    std::cout << "trained " << head_name << " on " << samples.size()
              << " samples, best episode " << result.best_episode
              << ", val loss " << result.val_loss[result.best_episode] << '\n';

    if (!loss_csv.empty()) {
        std::ofstream out(loss_csv);
        out << "episode,train_loss,val_loss\n";
        for (std::size_t i = 0; i < result.train_loss.size(); ++i)
            out << i << ',' << result.train_loss[i] << ',' << result.val_loss[i] << '\n';
    }
    return 0;
}

int cmd_evaluate(const std::string& config, const std::string& model_path,
                 const std::vector<std::string>& data_files,
                 const std::string& head_name) {
    const fsd::SimParams sp = load_or_default(config);
    const fsd::RnnModel model = fsd::load_model(model_path);
    const fsd::HeadKind head =
        head_name == "vanilla" ? fsd::HeadKind::Vanilla : fsd::HeadKind::Parnn;
    for (const auto& file : data_files) {
        const auto samples =
            fsd::build_dataset(fsd::read_log_csv(file), sp.drone);
        const double rmse = fsd::evaluate_rmse(model, head, samples, sp.drone);
        std::cout << file << ": RMSE " << rmse << " N (" << samples.size()
                  << " samples)\n";
    }
    return 0;
}

int cmd_simulate(const std::string& config, const std::string& controller,
                 const std::string& model, std::uint64_t seed,
                 const std::string& out_dir) {
    const fsd::SimParams sp = load_or_default(config);
    fsd::ScenarioConfig scenario;
    scenario.seed = seed;
    scenario.model_path = model;
    scenario.controller = parse_controller(controller);

    fsd::AeroEstimator est(scenario.controller);
    if (scenario.controller == fsd::EstimatorMode::Parnn)
        est = fsd::AeroEstimator(fsd::load_model(model), sp.drone);

    const fsd::RunRecord rec = fsd::run_trial(scenario, 0, sp, est);
    fs::create_directories(out_dir);
    fsd::write_trace_csv(rec, (fs::path(out_dir) / "trace.csv").string());

    json metrics = {
        {"outcome", rec.outcome == fsd::Outcome::Completed ? "completed"
                    : rec.outcome == fsd::Outcome::Collided ? "collided"
                    : rec.outcome == fsd::Outcome::Diverged ? "diverged"
                                                            : "timed_out"},
        {"tracking_rmse_m", rec.tracking_rmse},
        {"travel_distance_m", rec.travel_distance},
    };
    std::ofstream(fs::path(out_dir) / "metrics.json") << metrics.dump(2) << '\n';
    std::cout << metrics.dump(2) << '\n';
    return 0;
}

int cmd_batch(const std::string& config, const std::string& scenario_name,
              int trials, std::uint64_t seed, const std::string& model,
              const std::string& out_dir) {
    const fsd::SimParams sp = load_or_default(config);
    fsd::ScenarioConfig scenario;
    scenario.seed = seed;
    scenario.trials = trials;
    scenario.model_path = model;

    const std::vector<fsd::EstimatorMode> controllers = {
        fsd::EstimatorMode::None, fsd::EstimatorMode::FlatPlate,
        fsd::EstimatorMode::Parnn};

    if (scenario_name == "forest") {
        const fsd::BatchResult batch =
            fsd::run_batch(scenario, controllers, sp, out_dir);
        for (const auto& c : batch.controllers)
            std::cout << c.name << ": success " << 100.0 * c.success_rate
                      << "%, mean travel " << c.mean_travel_distance
                      << " m, mean RMSE " << c.rmse_mean << " m\n";
        return 0;
    }
    if (scenario_name == "steering") {
        json summary;
        for (fsd::EstimatorMode mode : controllers) {
            fsd::AeroEstimator est(mode);
            if (mode == fsd::EstimatorMode::Parnn)
                est = fsd::AeroEstimator(fsd::load_model(model), sp.drone);
            std::vector<double> rmses;
            double sum = 0.0;
            for (double angle_deg : scenario.steering_angles_deg) {
                for (int s = 0; s < trials; ++s) {
                    const auto rec = fsd::run_steering(
                        angle_deg * M_PI / 180.0, scenario,
                        seed + 1000 * s, sp, est);
                    rmses.push_back(rec.tracking_rmse);
                    sum += rec.tracking_rmse;
                }
            }
            const std::string name =
                mode == fsd::EstimatorMode::None        ? "wingless"
                : mode == fsd::EstimatorMode::FlatPlate ? "flat_plate"
                                                        : "parnn";
            summary[name] = {{"rmse_mean", sum / rmses.size()},
                             {"rmse_per_run", rmses}};
            std::cout << name << ": mean RMSE " << sum / rmses.size() << " m\n";
        }
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "steering_summary.json")
            << summary.dump(2) << '\n';
        return 0;
    }
    std::cerr << "error: unknown scenario '" << scenario_name << "'\n";
    return 1;
}

int cmd_report(const std::string& config, const std::string& in_dir,
               bool dump_config) {
    if (dump_config) {
        std::cout << fsd::dump_params(load_or_default(config)) << '\n';
        return 0;
    }
    const fs::path summary_path = fs::path(in_dir) / "summary.json";
    if (!fs::exists(summary_path)) {
        std::cerr << "error: no summary.json under " << in_dir << '\n';
        return 1;
    }
    json j = json::parse(std::ifstream(summary_path));
    std::cout << "controller      success%   travel[m]   rmse[m]\n";
    for (auto& [name, v] : j.items()) {
        std::printf("%-14s %8.1f %11.1f %9.3f\n", name.c_str(),
                    100.0 * v["success_rate"].get<double>(),
                    v["mean_travel_distance_m"].get<double>(),
                    v["rmse_mean"].get<double>());
    }
    std::cout << '\n' << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Foldable-wing drone simulation and control experiments"};
    app.require_subcommand(1);

    std::string config, controller = "wingless", model, out = "out", data;
    std::string scenario = "forest", head = "parnn", loss_csv;
    std::vector<std::string> data_files;
    std::uint64_t seed = 1;
    int trials = 21, episodes = 800;
    double lr = 3e-3, duration_scale = 1.0;
    bool dump_config = false;

    auto* sim = app.add_subcommand("simulate", "run a single forest trial");
    sim->add_option("--config", config);
    sim->add_option("--controller", controller);
    sim->add_option("--model", model);
    sim->add_option("--seed", seed);
    sim->add_option("--out", out);

    auto* batch = app.add_subcommand("batch", "run a paired-seed batch");
    batch->add_option("--config", config);
    batch->add_option("--scenario", scenario)->check(CLI::IsMember({"forest", "steering"}));
    batch->add_option("--trials", trials);
    batch->add_option("--seed", seed);
    batch->add_option("--model", model);
    batch->add_option("--out", out);

    auto* collect = app.add_subcommand("collect", "generate training flight logs");
    collect->add_option("--config", config);
    collect->add_option("--seed", seed);
    collect->add_option("--out", out);
    collect->add_option("--duration-scale", duration_scale);

    auto* train = app.add_subcommand("train", "train an aerodynamic model");
    train->add_option("--config", config);
    train->add_option("--data", data)->required();
    train->add_option("--episodes", episodes);
    train->add_option("--lr", lr);
    train->add_option("--seed", seed);
    train->add_option("--head", head)->check(CLI::IsMember({"parnn", "vanilla"}));
    train->add_option("--out", out);
    train->add_option("--loss-csv", loss_csv);

    auto* eval = app.add_subcommand("evaluate", "evaluate a model on logs");
    eval->add_option("--config", config);
    eval->add_option("--model", model)->required();
    eval->add_option("--head", head)->check(CLI::IsMember({"parnn", "vanilla"}));
    eval->add_option("--data", data_files)->required();

    auto* report = app.add_subcommand("report", "summarize batch outputs");
    report->add_option("--config", config);
    report->add_option("--in", out);
    report->add_flag("--dump-config", dump_config);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config, controller, model, seed, out);
        if (batch->parsed()) return cmd_batch(config, scenario, trials, seed, model, out);
        if (collect->parsed()) return cmd_collect(config, out, seed, duration_scale);
        if (train->parsed())
            return cmd_train(config, data, out, head, episodes, lr, seed, loss_csv);
        if (eval->parsed()) return cmd_evaluate(config, model, data_files, head);
        if (report->parsed()) return cmd_report(config, out, dump_config);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
