#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "prdc/dataset.hpp"
#include "prdc/lineworld.hpp"
#include "test_helpers.hpp"

using namespace prdc;
namespace fs = std::filesystem;

namespace {

bool datasets_equal(const OfflineDataset& a, const OfflineDataset& b) {
    return a.env_id == b.env_id && a.state_dim == b.state_dim && a.action_dim == b.action_dim &&
           a.normalized == b.normalized && a.states == b.states && a.actions == b.actions &&
           a.rewards == b.rewards && a.next_states == b.next_states && a.dones == b.dones &&
           a.state_mean == b.state_mean && a.state_std == b.state_std;
}

}  // namespace

TEST_CASE("constant states normalize to zero via the std floor", "[dataset]") {
    OfflineDataset ds;
    ds.env_id = "const";
    ds.state_dim = 1;
    ds.action_dim = 1;
    ds.states = MatrixXd::Constant(1, 8, 5.0);
    ds.next_states = MatrixXd::Constant(1, 8, 5.0);
    ds.actions = MatrixXd::Zero(1, 8);
    ds.rewards = VectorXd::Zero(8);
    ds.dones = VectorXd::Zero(8);
    const OfflineDataset norm = normalize_states(ds);
    REQUIRE(norm.states.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(norm.state_std(0) == kStdFloor);
}

TEST_CASE("two-point normalization gives unit deviations", "[dataset]") {
    OfflineDataset ds;
    ds.env_id = "two";
    ds.state_dim = 1;
    ds.action_dim = 1;
    ds.states.resize(1, 2);
    ds.states << 0.0, 2.0;
    ds.next_states = ds.states;
    ds.actions = MatrixXd::Zero(1, 2);
    ds.rewards = VectorXd::Zero(2);
    ds.dones = VectorXd::Zero(2);
    const OfflineDataset norm = normalize_states(ds);
    REQUIRE(norm.states(0, 0) == Catch::Approx(-1.0).epsilon(1e-12));
    REQUIRE(norm.states(0, 1) == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(norm.state_mean(0) == Catch::Approx(1.0));
    REQUIRE(norm.state_std(0) == Catch::Approx(1.0));
}

TEST_CASE("lineworld-medium normalizes to zero mean", "[dataset]") {
    DatasetSpec spec;
    spec.variant = LineworldVariant::medium;
    const OfflineDataset norm = normalize_states(generate_dataset(spec));
    // Oracle: recompute the moments of the stored columns after the transform.
    const auto n = static_cast<double>(norm.size());
    const double mean =
        (norm.states.row(0).sum() + norm.next_states.row(0).sum()) / (2.0 * n);
    REQUIRE(std::abs(mean) < 1e-9);
    double var = 0.0;
    for (Eigen::Index c = 0; c < norm.states.cols(); ++c) {
        var += norm.states(0, c) * norm.states(0, c) + norm.next_states(0, c) * norm.next_states(0, c);
    }
    REQUIRE(var / (2.0 * n) == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("normalization errors: empty and repeated", "[dataset]") {
    OfflineDataset empty;
    empty.state_dim = 1;
    empty.action_dim = 1;
    REQUIRE_THROWS_AS(normalize_states(empty), ConfigError);

    DatasetSpec spec;
    spec.variant = LineworldVariant::easy;
    const OfflineDataset once = normalize_states(generate_dataset(spec));
    REQUIRE_THROWS_AS(normalize_states(once), ConfigError);
}

TEST_CASE("denormalizing with the stored statistics recovers raw states", "[dataset]") {
    Rng rng(21);
    const OfflineDataset raw = prdc_test::random_dataset(3, 2, 500, rng, 10.0);
    const OfflineDataset norm = normalize_states(raw);
    for (size_t i = 0; i < raw.size(); i += 17) {
        const VectorXd rec = norm.denormalize_state(norm.states.col(i));
        REQUIRE((rec - raw.states.col(i)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("sampling a singleton dataset repeats the transition", "[dataset]") {
    Rng rng(23);
    const OfflineDataset ds = prdc_test::random_dataset(2, 1, 1, rng);
    Rng sample_rng(5);
    const MiniBatch b = sample_batch(ds, 4, sample_rng);
    REQUIRE(b.size() == 4);
    for (int i = 0; i < 4; ++i) {
        REQUIRE(b.indices[i] == 0);
        REQUIRE(b.states.col(i) == ds.states.col(0));
    }
}

TEST_CASE("sampling is deterministic for a fixed seed", "[dataset]") {
    Rng rng(25);
    const OfflineDataset ds = prdc_test::random_dataset(2, 1, 50, rng);
    Rng r1(99), r2(99);
    const MiniBatch a = sample_batch(ds, 32, r1);
    const MiniBatch b = sample_batch(ds, 32, r2);
    REQUIRE(a.indices == b.indices);
}

TEST_CASE("sample frequencies stay within 4 sigma of uniform", "[dataset]") {
    Rng rng(27);
    const OfflineDataset ds = prdc_test::random_dataset(1, 1, 10, rng);
    Rng sample_rng(1234);
    const int draws = 100000;
    std::vector<int> counts(10, 0);
    const MiniBatch b = sample_batch(ds, draws, sample_rng);
    for (size_t idx : b.indices) counts[idx] += 1;
    // Binomial(1e5, 1/10): sigma = sqrt(n p (1-p)) ~ 94.87.
    const double expected = draws / 10.0;
    const double sigma = std::sqrt(draws * 0.1 * 0.9);
    for (int c : counts) {
        REQUIRE(std::abs(c - expected) < 4.0 * sigma);
    }
}

TEST_CASE("sampled transitions are stored transitions, never fabricated", "[dataset]") {
    Rng rng(29);
    const OfflineDataset ds = prdc_test::random_dataset(3, 2, 40, rng);
    Rng sample_rng(7);
    const MiniBatch b = sample_batch(ds, 64, sample_rng);
    for (int i = 0; i < b.size(); ++i) {
        const size_t j = b.indices[i];
        REQUIRE(b.states.col(i) == ds.states.col(j));
        REQUIRE(b.actions.col(i) == ds.actions.col(j));
        REQUIRE(b.rewards(i) == ds.rewards(j));
        REQUIRE(b.next_states.col(i) == ds.next_states.col(j));
        REQUIRE(b.dones(i) == ds.dones(j));
    }
}

TEST_CASE("sampling errors", "[dataset]") {
    OfflineDataset empty;
    empty.state_dim = 1;
    empty.action_dim = 1;
    Rng rng(1);
    REQUIRE_THROWS_AS(sample_batch(empty, 4, rng), ConfigError);
}

TEST_CASE("save/load round-trips randomized datasets exactly", "[dataset]") {
    Rng rng(31);
    const auto path = fs::temp_directory_path() / "prdc_test_ds.bin";
    for (int trial = 0; trial < 100; ++trial) {
        const int sd = 1 + static_cast<int>(rng.uniform_index(4));
        const int ad = 1 + static_cast<int>(rng.uniform_index(3));
        const size_t n = 1 + rng.uniform_index(60);
        OfflineDataset ds = prdc_test::random_dataset(sd, ad, n, rng, 5.0);
        if (trial % 3 == 0) ds = normalize_states(ds);
        save_dataset(ds, path.string());
        const OfflineDataset back = load_dataset(path.string());
        REQUIRE(datasets_equal(ds, back));
    }
    fs::remove(path);
}

TEST_CASE("dataset parse errors: truncation and bad magic", "[dataset]") {
    Rng rng(33);
    const OfflineDataset ds = prdc_test::random_dataset(2, 1, 10, rng);
    const auto path = fs::temp_directory_path() / "prdc_test_ds_bad.bin";

    save_dataset(ds, path.string());
    fs::resize_file(path, fs::file_size(path) - 5);
    REQUIRE_THROWS_WITH(load_dataset(path.string()),
                        Catch::Matchers::ContainsSubstring("truncated") &&
                            Catch::Matchers::ContainsSubstring("byte"));

    {
        std::ofstream f(path, std::ios::binary);
        f << "WRONGMAG" << std::string(32, '\0');
    }
    REQUIRE_THROWS_WITH(load_dataset(path.string()),
                        Catch::Matchers::ContainsSubstring("bad magic"));
    fs::remove(path);
}
