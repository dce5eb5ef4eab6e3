#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PRDC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

fs::path sandbox() {
    const auto dir = fs::temp_directory_path() / "prdc_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string tiny_train_args(const fs::path& data, const fs::path& out) {
    return "train --data " + data.string() + " --out " + out.string() +
           " --steps 30 --width 8 --batch_size 8 --eval_interval 15 --eval_episodes 2"
           " --probe_interval 0";
}

}  // namespace

TEST_CASE("gen writes deterministic dataset files", "[cli]") {
    const auto dir = sandbox();
    const auto d1 = dir / "easy_a.bin";
    const auto d2 = dir / "easy_b.bin";
    REQUIRE(run_cli("gen --variant easy --seed 0 --out " + d1.string()) == 0);
    REQUIRE(run_cli("gen --variant easy --seed 0 --out " + d2.string()) == 0);
    REQUIRE(slurp(d1) == slurp(d2));

    REQUIRE(run_cli("gen --variant impossible --seed 0 --out " + (dir / "x.bin").string()) == 2);
    REQUIRE(run_cli("gen --variant easy") == 2);  // missing required --out
}

TEST_CASE("gen superhard produces the full 10100-transition file", "[cli]") {
    const auto dir = sandbox();
    const auto data = dir / "superhard.bin";
    REQUIRE(run_cli("gen --variant superhard --seed 0 --out " + data.string()) == 0);
    // 8 magic + (4+len) env_id + 4+4 dims + 1 flag + 8 count + 10100*(8+8+8+8+1)
    const std::string env_id = "lineworld-superhard";
    const auto expect = 8 + 4 + env_id.size() + 9 + 8 + 10100 * 33;
    REQUIRE(fs::file_size(data) == expect);
}

TEST_CASE("train writes artifacts and honors the exit-code contract", "[cli]") {
    const auto dir = sandbox();
    const auto data = dir / "train_easy.bin";
    REQUIRE(run_cli("gen --variant easy --seed 0 --out " + data.string()) == 0);

    const auto out = dir / "run1";
    fs::remove_all(out);
    REQUIRE(run_cli(tiny_train_args(data, out)) == 0);
    REQUIRE(fs::exists(out / "manifest.json"));
    REQUIRE(fs::exists(out / "runlog.csv"));
    REQUIRE(fs::exists(out / "checkpoint" / "actor.nn"));

    // Missing dataset file -> usage/config error.
    REQUIRE(run_cli("train --data " + (dir / "nope.bin").string() + " --out " +
                    (dir / "runx").string() + " --steps 5") == 2);
    // Unknown algorithm -> usage/config error.
    REQUIRE(run_cli(tiny_train_args(data, dir / "runy") + " --algorithm sac") == 2);
}

TEST_CASE("re-running from the emitted manifest reproduces the log", "[cli]") {
    const auto dir = sandbox();
    const auto data = dir / "manifest_easy.bin";
    REQUIRE(run_cli("gen --variant easy --seed 3 --out " + data.string()) == 0);

    const auto out1 = dir / "mrun1";
    const auto out2 = dir / "mrun2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    REQUIRE(run_cli(tiny_train_args(data, out1)) == 0);
    REQUIRE(run_cli("train --config " + (out1 / "manifest.json").string() + " --out " +
                    out2.string()) == 0);
    REQUIRE(slurp(out1 / "runlog.csv") == slurp(out2 / "runlog.csv"));
}

TEST_CASE("eval reports a verdict and rejects bad usage", "[cli]") {
    const auto dir = sandbox();
    const auto data = dir / "eval_easy.bin";
    REQUIRE(run_cli("gen --variant easy --seed 0 --out " + data.string()) == 0);

    // Untrained checkpoint: steps 0 keeps the near-zero policy.
    const auto out = dir / "fresh_run";
    fs::remove_all(out);
    REQUIRE(run_cli("train --data " + data.string() + " --out " + out.string() +
                    " --steps 0 --width 8 --eval_episodes 2 --probe_interval 0") == 0);

    const auto eval_out = dir / "fresh_eval";
    REQUIRE(run_cli("eval --run " + out.string() + " --episodes 10 --seeds 5 --out " +
                    eval_out.string()) == 0);
    const auto report = nlohmann::json::parse(slurp(eval_out / "eval_report.json"));
    REQUIRE(report["accomplished"].is_boolean());
    REQUIRE(report["accomplished"] == false);
    REQUIRE(report["total_episodes"] == 50);

    REQUIRE(run_cli("eval --run " + out.string() + " --episodes 0") == 2);
    REQUIRE(run_cli("eval --run " + (dir / "missing_run").string()) == 2);
}

TEST_CASE("sweep writes a summary and tolerates failing values", "[cli]") {
    const auto dir = sandbox();
    const auto data = dir / "sweep_easy.bin";
    REQUIRE(run_cli("gen --variant easy --seed 0 --out " + data.string()) == 0);

    const auto cfg_path = dir / "sweep_base.cfg";
    {
        std::ofstream f(cfg_path);
        f << "data = " << data.string() << "\n"
          << "algorithm = prdc\nsteps = 10\nwidth = 8\nbatch_size = 8\n"
          << "eval_interval = 0\nprobe_interval = 0\n";
    }
    const auto out = dir / "sweep_out";
    fs::remove_all(out);
    REQUIRE(run_cli("sweep --config " + cfg_path.string() +
                    " --axis beta --values 2.0,-1.0 --seeds 1 --out " + out.string()) == 0);
    const auto summary = nlohmann::json::parse(slurp(out / "sweep.json"));
    REQUIRE(summary["axis"] == "beta");
    REQUIRE(summary["summaries"].size() == 2);
    REQUIRE(summary["summaries"][1]["runs_failed"] == 1);

    REQUIRE(run_cli("sweep --config " + cfg_path.string() + " --axis beta --values '' --out " +
                    (dir / "sweep_bad").string()) == 2);
}

TEST_CASE("bench-index checks equality while timing", "[cli]") {
    const auto dir = sandbox();
    REQUIRE(run_cli("bench-index --sizes 64,512 --queries 20 --out " +
                    (dir / "bench").string()) == 0);
    REQUIRE(fs::exists(dir / "bench" / "bench_index.csv"));
    REQUIRE(run_cli("bench-index --sizes 64 --queries 5") == 2);  // needs two sizes
}

TEST_CASE("diag emits probe, trace, and profile artifacts", "[cli]") {
    const auto dir = sandbox();
    const auto data = dir / "diag_easy.bin";
    REQUIRE(run_cli("gen --variant easy --seed 0 --out " + data.string()) == 0);
    const auto run = dir / "diag_run";
    fs::remove_all(run);
    REQUIRE(run_cli(tiny_train_args(data, run)) == 0);

    const auto out = dir / "diag_out";
    REQUIRE(run_cli("diag --run " + run.string() + " --out " + out.string() +
                    " --episodes 2 --probes 3") == 0);
    for (const char* name : {"diag.json", "profile.csv", "probes.csv", "trace.csv"}) {
        INFO(name);
        REQUIRE(fs::exists(out / name));
    }
    const auto diag = nlohmann::json::parse(slurp(out / "diag.json"));
    REQUIRE(diag["distance_beta"] == 1.0);
}
