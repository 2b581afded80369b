#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "wcse/commands.hpp"
#include "wcse/embedding_file.hpp"
#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"
#include "wcse/metrics.hpp"

using namespace wcse;
using namespace wcse::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("wcse_test_" + std::to_string(std::random_device{}()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TrainConfig small_config() {
    TrainConfig c;
    c.steps = 30;
    c.eval_every = 10;
    c.batch_size = 32;
    c.per_cluster = 20;
    return c;
}

// Values exactly representable in f32.
Matrix f32_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m = random_matrix(rows, cols, rng);
    for (double& v : m.data()) v = static_cast<double>(static_cast<float>(v));
    return m;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config: parse, serialize, parse is the identity") {
    TrainConfig c;
    c.temperature = 0.07;
    c.lambda_m = 0.3;
    c.num_positives = 4;
    c.shuffled = false;
    c.learning_rate = 1.0 / 3.0;
    c.loss_kind = LossKind::sum_in;
    c.aug_kind = AugKind::dropout_only;
    c.seed = 18446744073709551615ULL;
    const TrainConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(parse_config(serialize_config(back)) == back);
    CHECK(parse_config(serialize_config(TrainConfig{})) == TrainConfig{});
}

TEST_CASE("config: comments, whitespace and errors") {
    const TrainConfig c = parse_config("# toy run\n  temperature = 0.1   # warmer\n\nsteps=5\n");
    CHECK(c.temperature == 0.1);
    CHECK(c.steps == 5);
    CHECK_THROWS_AS(parse_config("bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("temperature = warm\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("steps\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("steps = -3\n"), ConfigError);
}

TEST_CASE("config: validation and lambda default") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.effective_lambda() == 0.5);
    c.lambda_m = 0.25;
    CHECK(c.effective_lambda() == 0.25);

    auto invalid = [](auto mutate) {
        TrainConfig bad;
        mutate(bad);
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    };
    invalid([](TrainConfig& b) { b.temperature = 0.0; });
    invalid([](TrainConfig& b) { b.momentum = 1.0; });
    invalid([](TrainConfig& b) { b.num_positives = 1; });
    invalid([](TrainConfig& b) { b.group_size = 5; });
    invalid([](TrainConfig& b) { b.batch_size = 1; });
    invalid([](TrainConfig& b) { b.dropout = 1.0; });
}

TEST_CASE("embedding file: bit-exact round trip") {
    Rng rng(1);
    const Matrix m = f32_matrix(7, 5, rng);
    std::stringstream ss;
    write_embeddings(ss, m);
    CHECK(ss.str().size() == 4 + 4 + 8 + 8 + 4 + 7 * 5 * 4);
    CHECK(ss.str().substr(0, 4) == "WEMB");
    CHECK(read_embeddings(ss) == m);
}

TEST_CASE("embedding file: bad header, truncation, non-finite, trailing bytes") {
    Rng rng(2);
    std::stringstream ss;
    write_embeddings(ss, f32_matrix(3, 2, rng));
    const std::string bytes = ss.str();

    std::istringstream magic("WEMX" + bytes.substr(4));
    CHECK_THROWS_AS(read_embeddings(magic), FormatError);
    std::string version = bytes;
    version[4] = 2;
    std::istringstream v(version);
    CHECK_THROWS_AS(read_embeddings(v), FormatError);
    std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(read_embeddings(truncated), FormatError);
    std::istringstream trailing(bytes + "zz");
    CHECK_THROWS_AS(read_embeddings(trailing), FormatError);

    std::string nan = bytes;
    const float q = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(&nan[bytes.size() - 4], &q, 4);
    std::istringstream n(nan);
    CHECK_THROWS_AS(read_embeddings(n), FormatError);

    CHECK_THROWS_AS(load_embeddings("/nonexistent/file.wemb"), FormatError);
}

TEST_CASE("synthetic: zero noise, determinism, unit centers") {
    const SyntheticData clean = generate_synthetic(3, 4, 5, 0.0, 11);
    for (std::size_t r = 0; r < clean.samples.rows(); ++r)
        for (std::size_t c = 0; c < 5; ++c) CHECK(clean.samples(r, c) == clean.centers(clean.labels[r], c));
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(norm(clean.centers.row(k)) - 1.0) <= 1e-12);

    const SyntheticData a = generate_synthetic(4, 10, 6, 0.3, 5);
    const SyntheticData b = generate_synthetic(4, 10, 6, 0.3, 5);
    CHECK(a.samples == b.samples);
    CHECK(a.labels == b.labels);
    CHECK(generate_synthetic(4, 10, 6, 0.3, 6).samples != a.samples);
    CHECK_THROWS_AS(generate_synthetic(0, 10, 6, 0.3, 5), ConfigError);
    CHECK_THROWS_AS(generate_synthetic(2, 10, 6, -1.0, 5), ConfigError);
}

TEST_CASE("synthetic: antipodal centers found by seed search") {
    // In one dimension two unit centers are +1/-1 or equal; search for opposite signs.
    std::uint64_t seed = 0;
    SyntheticData d;
    for (;; ++seed) {
        d = generate_synthetic(2, 3, 1, 0.0, seed);
        if (d.centers(0, 0) * d.centers(1, 0) < 0.0) break;
    }
    const double cos = d.centers(0, 0) * d.centers(1, 0);
    CHECK(cos == doctest::Approx(-1.0).epsilon(1e-15));
    for (const ScoredPair& p : scored_pairs(d.labels, d.centers)) {
        const double expected = d.labels[p.a] == d.labels[p.b] ? 1.0 : cos;
        CHECK(p.score == doctest::Approx(expected).epsilon(1e-15));
    }
}

TEST_CASE("synthetic: pair harness and anisotropy") {
    const SyntheticData d = generate_synthetic(4, 6, 8, 0.1, 3);
    const auto pairs = scored_pairs(d.labels, d.centers);
    CHECK(pairs.size() == 24 * 23 / 2);
    CHECK(pair_spearman(d.samples, pairs) > 0.5);

    const Matrix cone = make_anisotropic(d.samples, 4.0, 9);
    CHECK(uniformity_loss(l2_normalize_rows(cone).rows) >
          uniformity_loss(l2_normalize_rows(d.samples).rows));
    CHECK(make_anisotropic(d.samples, 4.0, 9) == cone);
}

TEST_CASE("dataset files round trip") {
    TempDir dir;
    const SyntheticData d = generate_synthetic(3, 5, 4, 0.2, 8);
    save_dataset(dir / "data", d);
    const SyntheticData back = load_dataset(dir / "data");
    CHECK(back.labels == d.labels);
    CHECK(max_abs_diff(back.samples, d.samples) <= 1e-6);
    CHECK(max_abs_diff(back.centers, d.centers) <= 1e-6);
    CHECK_THROWS_AS(load_dataset(dir / "missing"), FormatError);
}

TEST_CASE("whiten: already-white data is only centered") {
    Rng rng(3);
    Matrix z = random_matrix(400, 6, rng);
    const WhiteningStats s = WhiteningStats::from_batch(z);
    z = apply_whitening(z, s, derive_whitening(s, WhiteningKind::zca));
    for (double& v : z.data()) v += 2.0;  // covariance I, mean 2
    WhitenOptions o;
    o.kind = "zca";
    const Matrix h = whiten_embeddings(z, o);
    Matrix centered = z;
    for (double& v : centered.data()) v -= 2.0;
    CHECK(max_abs_diff(h, centered) <= 1e-6);
}

TEST_CASE("whiten: group with g = d equals zca") {
    Rng rng(4);
    const Matrix z = naive_matmul(random_matrix(200, 8, rng), random_matrix(8, 8, rng));
    WhitenOptions zca;
    zca.kind = "zca";
    WhitenOptions group;
    group.kind = "group";
    group.group_size = 8;
    CHECK(max_abs_diff(whiten_embeddings(z, zca), whiten_embeddings(z, group)) <= 1e-9);
    group.group_size = 0;
    CHECK(max_abs_diff(whiten_embeddings(z, zca), whiten_embeddings(z, group)) <= 1e-9);
    WhitenOptions bad;
    bad.kind = "bogus";
    CHECK_THROWS_AS(whiten_embeddings(z, bad), ConfigError);
    bad.kind = "group";
    bad.group_size = 3;
    CHECK_THROWS_AS(whiten_embeddings(z, bad), ConfigError);
}

TEST_CASE("cmd_whiten: anisotropic file gets more uniform for every kind") {
    TempDir dir;
    GenOptions gen;
    gen.out_prefix = dir / "cone";
    gen.dim = 16;
    gen.anisotropy = 4.0;
    std::ostringstream log;
    cmd_gen(gen, log);
    for (const char* kind : {"pca", "zca", "group", "sgw"}) {
        WhitenOptions o;
        o.input = dir / "cone.wemb";
        o.output = dir / (std::string(kind) + ".wemb");
        o.kind = kind;
        o.group_size = 8;
        o.seed = 5;
        std::ostringstream out;
        const WhitenSummary s = cmd_whiten(o, out);
        CHECK(s.uniformity_after < s.uniformity_before);
        CHECK(out.str().find("uniformity_before=") != std::string::npos);
        const Matrix written = load_embeddings(o.output);
        CHECK(written.rows() == 320);
    }
}

TEST_CASE("cmd_whiten: singular input is a numeric error") {
    TempDir dir;
    Rng rng(5);
    Matrix z = f32_matrix(50, 4, rng);
    for (std::size_t r = 0; r < z.rows(); ++r) z(r, 3) = z(r, 2);
    save_embeddings(dir / "dup.wemb", z);
    WhitenOptions o;
    o.input = dir / "dup.wemb";
    o.output = dir / "out.wemb";
    std::ostringstream log;
    try {
        cmd_whiten(o, log);
        FAIL("expected a singular covariance");
    } catch (const Error& e) {
        CHECK(e.is_numeric());
    }
}

TEST_CASE("train: zero steps gives only the initial evaluation") {
    TrainConfig c = small_config();
    c.steps = 0;
    const TrainResult r = train(c, make_dataset(c));
    REQUIRE(r.report.records.size() == 1);
    CHECK(r.report.records[0].step == 0);
    CHECK(r.report.best_index == 0);
}

TEST_CASE("train: record cadence and ordering") {
    TrainConfig c = small_config();
    c.steps = 25;
    const TrainResult r = train(c, make_dataset(c));
    std::vector<std::size_t> steps;
    for (const auto& rec : r.report.records) steps.push_back(rec.step);
    CHECK(steps == std::vector<std::size_t>{0, 10, 20, 25});
    for (const auto& rec : r.report.records) {
        CHECK(std::isfinite(rec.loss));
        CHECK(rec.metrics.alignment >= 0.0);
        CHECK(rec.metrics.uniformity <= 0.0);
    }
}

TEST_CASE("train: identical configuration gives identical reports and checkpoints") {
    TempDir dir;
    for (AugKind aug : {AugKind::sgw, AugKind::dropout_only}) {
        TrainOptions o;
        o.config = small_config();
        o.config.aug_kind = aug;
        std::ostringstream log;
        o.report_out = dir / "a.txt";
        o.checkpoint_out = dir / "a.ckpt";
        cmd_train(o, log);
        o.report_out = dir / "b.txt";
        o.checkpoint_out = dir / "b.ckpt";
        cmd_train(o, log);
        CHECK(read_file(dir / "a.txt") == read_file(dir / "b.txt"));
        CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));
        CHECK_FALSE(read_file(dir / "a.txt").empty());
    }
}

TEST_CASE("report lines parse back") {
    TempDir dir;
    TrainOptions o;
    o.config = small_config();
    o.report_out = dir / "r.txt";
    std::ostringstream log;
    const TrainResult r = cmd_train(o, log);
    std::ifstream in(o.report_out);
    std::string line;
    std::vector<std::map<std::string, std::string>> parsed;
    while (std::getline(in, line)) parsed.push_back(parse_record(line));
    REQUIRE(parsed.size() == r.report.records.size() + 1);
    for (std::size_t i = 0; i < r.report.records.size(); ++i) {
        CHECK(parsed[i].at("record") == "eval");
        CHECK(std::stoul(parsed[i].at("step")) == r.report.records[i].step);
        CHECK(parse_double(parsed[i].at("uniformity"), "u") == r.report.records[i].metrics.uniformity);
    }
    CHECK(parsed.back().at("record") == "summary");
    CHECK(std::stoul(parsed.back().at("best_step")) == r.report.best().step);
    CHECK_THROWS_AS(parse_record("no_equals_sign"), FormatError);
}

TEST_CASE("eval after train reproduces the best record bit for bit") {
    TempDir dir;
    for (AugKind aug : {AugKind::sgw, AugKind::dropout_only}) {
        TrainOptions t;
        t.config = small_config();
        t.config.aug_kind = aug;
        t.report_out = dir / "r.txt";
        t.checkpoint_out = dir / "c.ckpt";
        std::ostringstream log;
        const TrainResult r = cmd_train(t, log);

        EvalOptions e;
        e.checkpoint = t.checkpoint_out;
        e.config = t.config;
        e.report_out = dir / "e.txt";
        const EvalMetrics m = cmd_eval(e, log);
        const EvalRecord& best = r.report.best();
        CHECK(m.alignment == best.metrics.alignment);
        CHECK(m.uniformity == best.metrics.uniformity);
        CHECK(m.spearman == best.metrics.spearman);
        CHECK(read_file(e.report_out) == "record=checkpoint_eval," + format_eval(m) + "\n");
    }
}

TEST_CASE("eval: collapsed checkpoint and version mismatch") {
    TempDir dir;
    TrainConfig c = small_config();
    save_checkpoint(dir / "zero.ckpt",
                    Checkpoint{EncoderState::zeros(c.input_dim, c.hidden_dim, c.embed_dim, 0.1), std::nullopt});
    EvalOptions e;
    e.checkpoint = dir / "zero.ckpt";
    e.config = c;
    std::ostringstream log;
    CHECK_THROWS_AS(cmd_eval(e, log), DegenerateInputError);

    std::string bytes = read_file(dir / "zero.ckpt");
    bytes[4] = 7;
    std::ofstream(dir / "old.ckpt", std::ios::binary) << bytes;
    e.checkpoint = dir / "old.ckpt";
    CHECK_THROWS_WITH_AS(cmd_eval(e, log), doctest::Contains("incompatible checkpoint version"),
                         FormatError);
}

TEST_CASE("train: data dimension must match the config") {
    TrainConfig c = small_config();
    Dataset d = make_dataset(c);
    c.input_dim = 10;
    CHECK_THROWS_AS(train(c, d), ConfigError);
}

TEST_CASE("ablate: a single value reproduces cmd_train") {
    TempDir dir;
    AblateOptions a;
    a.config = small_config();
    a.sweep = parse_sweep("group_size=8");
    a.report_out = dir / "ablate.txt";
    std::ostringstream log;
    const auto rows = cmd_ablate(a, log);
    REQUIRE(rows.size() == 1);

    TrainOptions t;
    t.config = a.config;
    t.report_out = dir / "train.txt";
    cmd_train(t, log);
    std::ifstream ablate_in(a.report_out), train_in(t.report_out);
    std::string al, tl;
    const std::string prefix = "sweep_key=group_size,sweep_value=8,";
    while (std::getline(train_in, tl)) {
        REQUIRE(std::getline(ablate_in, al));
        CHECK(al == prefix + tl);
    }
    CHECK_FALSE(std::getline(ablate_in, al));
}

TEST_CASE("ablate: number of positives 2 and 3 both complete") {
    TempDir dir;
    AblateOptions a;
    a.config = small_config();
    a.sweep = parse_sweep("num_positives=2,3");
    a.report_out = dir / "ablate.txt";
    std::ostringstream log;
    const auto rows = cmd_ablate(a, log);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.final_record.step == a.config.steps);
        CHECK(std::isfinite(row.final_record.metrics.alignment));
        CHECK(std::isfinite(row.final_record.metrics.uniformity));
        CHECK(std::isfinite(row.final_record.metrics.spearman));
    }
    CHECK(log.str().find("num_positives") != std::string::npos);
}

TEST_CASE("ablate: sweep parsing and up-front validation") {
    CHECK(parse_sweep("loss_kind=sum_out,sum_in").values == std::vector<std::string>{"sum_out", "sum_in"});
    CHECK_THROWS_AS(parse_sweep("temperature=0.1"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("group_size"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("group_size="), ConfigError);

    TempDir dir;
    AblateOptions a;
    a.config = small_config();
    a.sweep = parse_sweep("group_size=8,5");
    a.report_out = dir / "ablate.txt";
    std::ostringstream log;
    CHECK_THROWS_AS(cmd_ablate(a, log), ConfigError);
    CHECK_FALSE(fs::exists(a.report_out));
}

}  // TEST_SUITE
