#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prdc/diagnostics.hpp"
#include "prdc/run_config.hpp"

namespace prdc {

struct RunLogRow {
    long step = 0;
    double critic_loss = 0.0;
    std::optional<double> actor_loss, lambda, dc_distance;
    std::optional<double> eval_return;
    std::optional<int> eval_success;
};

struct RunLog {
    std::vector<RunLogRow> rows;
    std::vector<ValueProbe> probes;
    std::vector<DistancePoint> trace;
    std::vector<long> eval_steps;
    std::vector<EvalReport> evals;
};

struct RunResult {
    RunConfig config;  // fully resolved
    PrdcConfig prdc;
    AgentState agent;
    OfflineDataset raw_dataset;
    OfflineDataset dataset;  // normalized view the agent trained on
    RunLog log;
    EvalReport final_eval;
};

/// Loads the configured dataset file, or generates the named lineworld
/// variant in memory.
inline OfflineDataset acquire_raw_dataset(const RunConfig& cfg) {
    if (!cfg.data.empty()) return load_dataset(cfg.data);
    DatasetSpec spec;
    spec.variant = parse_variant(cfg.variant);
    spec.samples_per_state = cfg.gen_samples_per_state;
    spec.seed = cfg.gen_seed;
    return generate_dataset(spec);
}

/// Full training run: normalization, index build, the step loop, periodic
/// evaluation/probes, and one final evaluation. Everything is deterministic
/// in the resolved config; evaluation and probes draw from sub-streams of
/// the run seed so their cadence never touches the training stream.
inline RunResult run_training(RunConfig cfg) {
    resolve_config(cfg);
    RunResult result;
    result.prdc = algorithm_config(cfg);
    result.raw_dataset = acquire_raw_dataset(cfg);
    result.dataset = result.raw_dataset.normalized ? result.raw_dataset
                                                   : normalize_states(result.raw_dataset);
    result.config = cfg;

    const OfflineDataset& ds = result.dataset;
    std::unique_ptr<NeighborIndex> index;
    if (result.prdc.needs_index()) {
        index = std::make_unique<NeighborIndex>(ds, result.prdc.beta);
    }
    std::unique_ptr<NeighborIndex> diag_index;  // beta = 1, for distance traces
    if (cfg.eval_interval > 0 || cfg.steps == 0) {
        diag_index = std::make_unique<NeighborIndex>(ds, 1.0);
    }

    Rng rng(cfg.seed);
    result.agent = init_agent(ds.state_dim, ds.action_dim, result.prdc, rng);

    auto probe_now = [&](long step) {
        Rng probe_rng(mix_seed(cfg.seed, mix_seed(kProbeStream, static_cast<uint64_t>(step))));
        result.log.probes.push_back(value_probe(result.agent, ds, result.prdc.td3, step,
                                                probe_rng, cfg.probe_states));
    };
    auto eval_now = [&](long step) {
        const auto policy =
            make_actor_policy(result.agent.actor, ds, result.prdc.td3.action_bound);
        const uint64_t eval_seed =
            mix_seed(cfg.seed, mix_seed(kEvalStream, static_cast<uint64_t>(step)));
        EvalReport report = evaluate_policy(policy, cfg.eval_episodes, eval_seed);
        if (diag_index) {
            result.log.trace.push_back(distance_point(*diag_index, ds, report, step));
        }
        result.log.eval_steps.push_back(step);
        result.log.evals.push_back(std::move(report));
    };

    if (cfg.probe_interval > 0) probe_now(0);

    result.log.rows.reserve(cfg.steps);
    for (long t = 1; t <= cfg.steps; ++t) {
        const StepMetrics m = train_step(result.agent, ds, index.get(), result.prdc, rng);
        RunLogRow row;
        row.step = m.step;
        row.critic_loss = m.critic_loss;
        row.actor_loss = m.actor_loss;
        row.lambda = m.lambda;
        row.dc_distance = m.dc_distance;
        if (cfg.eval_interval > 0 && t % cfg.eval_interval == 0) {
            eval_now(t);
            row.eval_return = result.log.evals.back().mean_return();
            row.eval_success = result.log.evals.back().success_count();
        }
        result.log.rows.push_back(std::move(row));
        if (cfg.probe_interval > 0 && t % cfg.probe_interval == 0) probe_now(t);
    }

    if (result.log.evals.empty() || result.log.eval_steps.back() != cfg.steps) {
        eval_now(cfg.steps);
    }
    result.final_eval = result.log.evals.back();
    return result;
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_opt(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline void write_runlog_csv(const RunLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "step,critic_loss,actor_loss,lambda,dc_distance,eval_return,eval_success\n";
    for (const auto& r : log.rows) {
        out << r.step << ',' << format_double(r.critic_loss) << ',' << detail::csv_opt(r.actor_loss)
            << ',' << detail::csv_opt(r.lambda) << ',' << detail::csv_opt(r.dc_distance) << ','
            << detail::csv_opt(r.eval_return) << ','
            << (r.eval_success ? std::to_string(*r.eval_success) : std::string()) << '\n';
    }
}

inline void write_probes_csv(const std::vector<ValueProbe>& probes, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "step,estimated_q,true_q\n";
    for (const auto& p : probes) {
        out << p.step << ',' << format_double(p.estimated_q) << ',' << format_double(p.true_q)
            << '\n';
    }
}

inline void write_trace_csv(const std::vector<DistancePoint>& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "step,mean_distance,beta\n";
    for (const auto& p : trace) {
        out << p.step << ',' << format_double(p.mean_distance) << ',' << format_double(p.beta)
            << '\n';
    }
}

inline void write_profile_csv(const std::vector<std::pair<double, double>>& profile,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "state,action\n";
    for (const auto& [s, a] : profile) {
        out << format_double(s) << ',' << format_double(a) << '\n';
    }
}

inline constexpr int kProfileGridPoints = 201;

/// Writes the run directory: manifest, RunLog CSV, diagnostic CSVs, policy
/// profile, checkpoints, and a JSON summary.
inline void write_run_artifacts(const RunResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "checkpoint");

    {
        std::ofstream m(fs::path(out_dir) / "manifest.json", std::ios::binary);
        if (!m) throw ConfigError("cannot write manifest under " + out_dir);
        m << manifest_json(result.config);
    }
    write_runlog_csv(result.log, (fs::path(out_dir) / "runlog.csv").string());
    if (!result.log.probes.empty()) {
        write_probes_csv(result.log.probes, (fs::path(out_dir) / "probes.csv").string());
    }
    if (!result.log.trace.empty()) {
        write_trace_csv(result.log.trace, (fs::path(out_dir) / "trace.csv").string());
    }
    const auto policy =
        make_actor_policy(result.agent.actor, result.dataset, result.prdc.td3.action_bound);
    write_profile_csv(policy_profile(policy, 0.0, 100.0, kProfileGridPoints),
                      (fs::path(out_dir) / "profile.csv").string());

    const auto ckpt = fs::path(out_dir) / "checkpoint";
    save_mlp(result.agent.actor, (ckpt / "actor.nn").string());
    save_mlp(result.agent.critic1, (ckpt / "critic1.nn").string());
    save_mlp(result.agent.critic2, (ckpt / "critic2.nn").string());
    save_mlp(result.agent.actor_target, (ckpt / "actor_target.nn").string());
    save_mlp(result.agent.critic1_target, (ckpt / "critic1_target.nn").string());
    save_mlp(result.agent.critic2_target, (ckpt / "critic2_target.nn").string());

    nlohmann::ordered_json summary;
    summary["env_id"] = result.raw_dataset.env_id;
    summary["algorithm"] = result.config.algorithm;
    summary["steps"] = result.config.steps;
    summary["seed"] = result.config.seed;
    summary["final_eval"] = {
        {"episodes", result.final_eval.episodes()},
        {"mean_return", result.final_eval.mean_return()},
        {"success_count", result.final_eval.success_count()},
    };
    nlohmann::ordered_json returns = nlohmann::ordered_json::array();
    for (double r : result.final_eval.returns) returns.push_back(r);
    summary["final_eval"]["returns"] = returns;
    std::ofstream s(fs::path(out_dir) / "summary.json", std::ios::binary);
    if (!s) throw ConfigError("cannot write summary under " + out_dir);
    s << summary.dump(2) << "\n";
}

/// A run directory reloaded for evaluation or diagnostics.
struct LoadedRun {
    RunConfig config;
    PrdcConfig prdc;
    AgentState agent;  // online nets from the checkpoint; targets mirror them
    OfflineDataset raw_dataset;
    OfflineDataset dataset;
};

inline LoadedRun load_run_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    LoadedRun run;
    apply_config_map(run.config, load_manifest((fs::path(dir) / "manifest.json").string()));
    resolve_config(run.config);
    run.prdc = algorithm_config(run.config);
    run.raw_dataset = acquire_raw_dataset(run.config);
    run.dataset =
        run.raw_dataset.normalized ? run.raw_dataset : normalize_states(run.raw_dataset);
    const auto ckpt = fs::path(dir) / "checkpoint";
    run.agent.actor = load_mlp((ckpt / "actor.nn").string());
    run.agent.critic1 = load_mlp((ckpt / "critic1.nn").string());
    run.agent.critic2 = load_mlp((ckpt / "critic2.nn").string());
    run.agent.actor_target = load_mlp((ckpt / "actor_target.nn").string());
    run.agent.critic1_target = load_mlp((ckpt / "critic1_target.nn").string());
    run.agent.critic2_target = load_mlp((ckpt / "critic2_target.nn").string());
    return run;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRun {
    double value = 0.0;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_return = 0.0;
    int final_success = 0;
    int episodes = 0;
};

struct SweepValueSummary {
    double value = 0.0;
    double mean_return = 0.0;
    double std_return = 0.0;
    int runs_ok = 0;
    int runs_failed = 0;
    bool all_success = false;  // every episode of every seed reached the goal
};

struct SweepResult {
    std::string axis;  // "beta" or "k"
    std::vector<SweepRun> runs;
    std::vector<SweepValueSummary> summaries;
};

/// Trains one run per (value, seed) along the chosen axis and aggregates
/// final evaluation scores. A failing run is recorded and the sweep moves
/// on. jobs > 1 runs children concurrently; each child is self-contained.
inline SweepResult run_sweep(const RunConfig& base, const std::string& axis,
                             const std::vector<double>& values,
                             const std::vector<uint64_t>& seeds, int jobs = 1,
                             const std::string& out_dir = "") {
    if (values.empty()) throw ConfigError("run_sweep: empty value list");
    if (seeds.empty()) throw ConfigError("run_sweep: empty seed list");
    if (axis != "beta" && axis != "k") throw ConfigError("run_sweep: axis must be beta or k");

    struct Job {
        RunConfig cfg;
        double value;
        uint64_t seed;
        std::string dir;
    };
    std::vector<Job> jobs_list;
    for (double v : values) {
        for (uint64_t s : seeds) {
            RunConfig cfg = base;
            cfg.seed = s;
            if (axis == "beta") {
                cfg.beta = v;
            } else {
                if (v < 1.0 || v != std::floor(v)) {
                    throw ConfigError("run_sweep: k values must be positive integers");
                }
                cfg.k = static_cast<int>(v);
            }
            std::string dir;
            if (!out_dir.empty()) {
                dir = (std::filesystem::path(out_dir) / "runs" /
                       (axis + "_" + format_double(v) + "_seed" + std::to_string(s)))
                          .string();
            }
            cfg.out = dir;
            jobs_list.push_back({std::move(cfg), v, s, dir});
        }
    }

    auto execute = [](const Job& job) {
        SweepRun r;
        r.value = job.value;
        r.seed = job.seed;
        try {
            RunResult res = run_training(job.cfg);
            if (!job.dir.empty()) write_run_artifacts(res, job.dir);
            r.ok = true;
            r.final_return = res.final_eval.mean_return();
            r.final_success = res.final_eval.success_count();
            r.episodes = res.final_eval.episodes();
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
        return r;
    };

    SweepResult result;
    result.axis = axis;
    result.runs.resize(jobs_list.size());
    if (jobs <= 1) {
        for (size_t i = 0; i < jobs_list.size(); ++i) result.runs[i] = execute(jobs_list[i]);
    } else {
        std::vector<std::future<SweepRun>> futures(jobs_list.size());
        size_t next = 0, active_base = 0;
        while (active_base < jobs_list.size()) {
            while (next < jobs_list.size() &&
                   next - active_base < static_cast<size_t>(jobs)) {
                futures[next] = std::async(std::launch::async, execute, std::cref(jobs_list[next]));
                ++next;
            }
            result.runs[active_base] = futures[active_base].get();
            ++active_base;
        }
    }

    for (double v : values) {
        SweepValueSummary s;
        s.value = v;
        double sum = 0.0, sumsq = 0.0;
        int n = 0;
        bool all_success = true;
        for (const auto& r : result.runs) {
            if (r.value != v) continue;
            if (!r.ok) {
                s.runs_failed += 1;
                all_success = false;
                continue;
            }
            s.runs_ok += 1;
            sum += r.final_return;
            sumsq += r.final_return * r.final_return;
            n += 1;
            if (r.final_success != r.episodes) all_success = false;
        }
        if (n > 0) {
            s.mean_return = sum / n;
            const double var = sumsq / n - s.mean_return * s.mean_return;
            s.std_return = var > 0.0 ? std::sqrt(var) : 0.0;
        }
        s.all_success = all_success && s.runs_ok > 0;
        result.summaries.push_back(s);
    }
    return result;
}

inline std::string sweep_json(const SweepResult& sweep) {
    nlohmann::ordered_json j;
    j["axis"] = sweep.axis;
    j["summaries"] = nlohmann::ordered_json::array();
    for (const auto& s : sweep.summaries) {
        j["summaries"].push_back({{"value", s.value},
                                  {"mean_return", s.mean_return},
                                  {"std_return", s.std_return},
                                  {"runs_ok", s.runs_ok},
                                  {"runs_failed", s.runs_failed},
                                  {"all_success", s.all_success}});
    }
    j["runs"] = nlohmann::ordered_json::array();
    for (const auto& r : sweep.runs) {
        j["runs"].push_back({{"value", r.value},
                             {"seed", r.seed},
                             {"ok", r.ok},
                             {"error", r.error},
                             {"final_return", r.final_return},
                             {"final_success", r.final_success},
                             {"episodes", r.episodes}});
    }
    return j.dump(2) + "\n";
}

}  // namespace prdc
