#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "seqcast/checkpoint.hpp"
#include "seqcast/train.hpp"

using namespace seqcast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("seqcast_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

ModelConfig tiny_config(std::size_t K = 2) {
    ModelConfig cfg;
    cfg.K = K;
    cfg.L = 16;
    cfg.T = 4;
    cfg.s = 4;
    cfg.d_model = 8;
    cfg.N = 1;
    cfg.d_state = 4;
    cfg.dropout_rate = 0.0;
    cfg.seed = 3;
    return cfg;
}

TrainConfig tiny_train() {
    TrainConfig tc;
    tc.lr = 1e-3;
    tc.batch_size = 8;
    tc.epochs = 2;
    tc.max_batches_per_epoch = 4;
    return tc;
}

} // namespace

TEST_CASE("load_csv: 10-row file splits 7/1/2 and parses values") {
    TempDir tmp;
    std::ofstream out(tmp.file("d.csv"));
    out << "date,a,b\n";
    for (int i = 0; i < 10; ++i)
        out << "2016-07-01 0" << i << ":00:00," << i << "," << 2 * i << "\n";
    out.close();

    TimeSeriesDataset ds = load_csv(tmp.file("d.csv"), 2, 0.7, 0.1, false);
    CHECK(ds.K() == 2);
    CHECK(ds.total_steps() == 10);
    CHECK(ds.columns == std::vector<std::string>{"a", "b"});
    CHECK(ds.train.begin == 0);
    CHECK(ds.train.end == 7);
    CHECK(ds.val.begin == 7);
    CHECK(ds.val.end == 8);
    CHECK(ds.test.begin == 8);
    CHECK(ds.test.end == 10);
    CHECK(ds.values.at({4, 1}) == 8.0);
    CHECK_FALSE(ds.standardized);
}

TEST_CASE("load_csv: standardization uses train-split statistics") {
    TempDir tmp;
    std::ofstream out(tmp.file("d.csv"));
    out << "date,a\n";
    for (int i = 0; i < 10; ++i) out << "t" << i << "," << i << "\n";
    out.close();
    TimeSeriesDataset ds = load_csv(tmp.file("d.csv"), 1, 0.7, 0.1, true);
    CHECK(ds.standardized);
    // train split is rows 0..6: mean 3, population std sqrt(4)
    CHECK(ds.col_mean[0] == doctest::Approx(3.0));
    CHECK(ds.col_std[0] == doctest::Approx(2.0));
    CHECK(ds.values.at({0, 0}) == doctest::Approx(-1.5));
    CHECK(ds.values.at({9, 0}) == doctest::Approx(3.0));
}

TEST_CASE("load_csv error messages name the offending cell") {
    TempDir tmp;
    std::ofstream out(tmp.file("bad.csv"));
    out << "date,a,b\n";
    out << "t0,1.0,2.0\n";
    out << "t1,oops,4.0\n";
    out.close();
    // rows are 1-based counting the header, columns 1-based with timestamp
    CHECK_THROWS_WITH_AS(load_csv(tmp.file("bad.csv")),
                         doctest::Contains("row 3, column 2"),
                         std::runtime_error);

    std::ofstream out2(tmp.file("narrow.csv"));
    out2 << "date,a\n";
    out2 << "t0,1.0\n";
    out2.close();
    CHECK_THROWS_AS(load_csv(tmp.file("narrow.csv"), 7),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_csv(tmp.file("missing.csv")), std::runtime_error);
}

TEST_CASE("synthetic ETT CSV round trip: shape, columns, determinism") {
    TempDir tmp;
    write_ett_csv(tmp.file("e.csv"), 50, 7, 9);
    TimeSeriesDataset ds = load_csv(tmp.file("e.csv"), 7, 0.7, 0.1, false);
    CHECK(ds.K() == 7);
    CHECK(ds.total_steps() == 50);
    Tensor direct = synth_ett_values(50, 7, 9);
    for (std::size_t i = 0; i < direct.numel(); ++i)
        CHECK(ds.values[i] == direct[i]);

    write_ett_csv(tmp.file("e2.csv"), 50, 7, 9);
    CHECK(read_all(tmp.file("e.csv")) == read_all(tmp.file("e2.csv")));
    CHECK(file_fingerprint(tmp.file("e.csv")) ==
          file_fingerprint(tmp.file("e2.csv")));
}

TEST_CASE("WindowIterator: window counts and index bookkeeping") {
    // split of length n yields n - (L+T) + 1 maximal windows
    Tensor vals({20, 1});
    for (std::size_t i = 0; i < 20; ++i) vals[i] = static_cast<double>(i);
    TimeSeriesDataset ds = dataset_from_values(vals, 0.7, 0.1, false);
    REQUIRE(ds.train.length() == 14);

    WindowIterator one(ds, Split::train, 10, 4, 8, false, Rng(0));
    CHECK(one.num_windows() == 1);
    WindowIterator five(ds, Split::train, 6, 4, 2, false, Rng(0));
    CHECK(five.num_windows() == 5);
    CHECK(five.num_batches() == 3); // 2 + 2 + 1, last partial batch kept

    WindowBatch b;
    REQUIRE(five.next(b));
    CHECK(b.x.shape() == std::vector<std::size_t>{2, 6, 1});
    CHECK(b.y.shape() == std::vector<std::size_t>{2, 4, 1});
    // chronological: first window covers rows [0,6) + targets [6,10)
    CHECK(b.x.at({0, 0, 0}) == 0.0);
    CHECK(b.x.at({0, 5, 0}) == 5.0);
    CHECK(b.y.at({0, 0, 0}) == 6.0);
    CHECK(b.y.at({1, 0, 0}) == 7.0); // second window shifted by 1
    REQUIRE(five.next(b));
    REQUIRE(five.next(b));
    CHECK(b.x.dim(0) == 1);
    CHECK_FALSE(five.next(b));
}

TEST_CASE("WindowIterator: shuffled order is seed-stable and a bijection") {
    Tensor vals({50, 1});
    for (std::size_t i = 0; i < 50; ++i) vals[i] = static_cast<double>(i);
    TimeSeriesDataset ds = dataset_from_values(vals, 0.8, 0.1, false);
    REQUIRE(ds.train.length() == 40);
    auto collect = [&](Rng rng) {
        WindowIterator it(ds, Split::train, 8, 2, 4, true, rng);
        std::vector<double> firsts;
        WindowBatch b;
        while (it.next(b))
            for (std::size_t i = 0; i < b.x.dim(0); ++i)
                firsts.push_back(b.x.at({i, 0, 0}));
        return firsts;
    };
    std::vector<double> a = collect(Rng(5)), c = collect(Rng(5));
    CHECK(a == c);
    std::vector<double> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        CHECK(sorted[i] == static_cast<double>(i));
}

TEST_CASE("window split too short for L+T is a configuration error") {
    Tensor vals({30, 1}, 1.0);
    TimeSeriesDataset ds = dataset_from_values(vals, 0.7, 0.1, false);
    // val split has length 3 < L+T = 14
    CHECK_THROWS_AS(WindowIterator(ds, Split::val, 10, 4, 2, false, Rng(0)),
                    std::invalid_argument);
}

TEST_CASE("persistence baseline: hand-computable ramp") {
    // value = t: repeating the last lookback value x[L-1] = L-1+start
    // against targets start+L..start+L+T-1 gives errors 1..T.
    Tensor vals({20, 1});
    for (std::size_t i = 0; i < 20; ++i) vals[i] = static_cast<double>(i);
    TimeSeriesDataset ds = dataset_from_values(vals, 0.7, 0.15, false);
    REQUIRE(ds.train.length() == 14);
    BaselineResult r = persistence_baseline(ds, Split::train, 4, 3);
    // per window MSE = (1+4+9)/3, MAE = 2; identical for every window
    CHECK(r.windows == 8);
    CHECK(r.mse == doctest::Approx(14.0 / 3.0));
    CHECK(r.mae == doctest::Approx(2.0));
}

TEST_CASE("adam_step: zero gradient leaves parameters unchanged") {
    TrainState st = make_train_state(tiny_config());
    st.model.params.zero_grad();
    std::vector<Tensor> before;
    for (auto& [n, p] : st.model.params.entries()) before.push_back(p->val);
    TrainConfig tc = tiny_train();
    adam_step(st, tc);
    std::size_t i = 0;
    for (auto& [n, p] : st.model.params.entries()) {
        for (std::size_t j = 0; j < p->val.numel(); ++j)
            CHECK(p->val[j] == before[i][j]);
        ++i;
    }
    CHECK(st.adam.step == 1);
}

TEST_CASE("adam_step: first step moves each parameter by ~lr") {
    TrainState st = make_train_state(tiny_config());
    st.model.params.zero_grad();
    for (auto& [n, p] : st.model.params.entries())
        for (std::size_t j = 0; j < p->grad.numel(); ++j) p->grad[j] = 0.5;
    TrainConfig tc = tiny_train();
    tc.lr = 1e-3;
    tc.clip_norm = 0.0; // disable clipping for the exact first-step identity
    std::vector<Tensor> before;
    for (auto& [n, p] : st.model.params.entries()) before.push_back(p->val);
    adam_step(st, tc);
    std::size_t i = 0;
    for (auto& [n, p] : st.model.params.entries()) {
        for (std::size_t j = 0; j < p->val.numel(); ++j)
            CHECK(before[i][j] - p->val[j] ==
                  doctest::Approx(tc.lr).epsilon(1e-6));
        ++i;
    }
}

TEST_CASE("adam_step: two constant-gradient steps match a hand unroll") {
    TrainState st = make_train_state(tiny_config());
    TrainConfig tc = tiny_train();
    tc.lr = 0.01;
    tc.clip_norm = 0.0;
    const double g = 0.3;
    auto& entries = st.model.params.entries();
    const double x0 = entries[0].second->val[0];
    for (int step = 0; step < 2; ++step) {
        st.model.params.zero_grad();
        for (auto& [n, p] : entries)
            for (std::size_t j = 0; j < p->grad.numel(); ++j) p->grad[j] = g;
        adam_step(st, tc);
    }
    // hand unroll with beta1=.9, beta2=.999, eps=1e-8
    double m = 0.0, v = 0.0, x = x0;
    for (int t = 1; t <= 2; ++t) {
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, t));
        const double vh = v / (1.0 - std::pow(0.999, t));
        x -= tc.lr * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(entries[0].second->val[0] == doctest::Approx(x).epsilon(1e-12));
}

TEST_CASE("adam_step rejects non-finite gradients") {
    TrainState st = make_train_state(tiny_config());
    st.model.params.zero_grad();
    st.model.params.entries()[0].second->grad[0] =
        std::numeric_limits<double>::quiet_NaN();
    TrainConfig tc = tiny_train();
    const double before = st.model.params.entries()[1].second->val[0];
    CHECK_THROWS_AS(adam_step(st, tc), std::runtime_error);
    CHECK(st.model.params.entries()[1].second->val[0] == before);
    CHECK(st.adam.step == 0);
}

TEST_CASE("config: parse, apply, round trip, unknown key rejected") {
    ModelConfig mc;
    TrainConfig tc;
    auto kv = parse_kv_text("K=5\nlr = 0.01\n# comment\n\nvpt=false\n");
    apply_config(kv, mc, tc);
    CHECK(mc.K == 5);
    CHECK(tc.lr == doctest::Approx(0.01));
    CHECK_FALSE(tc.vpt);

    std::string text = config_to_text(mc, tc);
    ModelConfig mc2;
    TrainConfig tc2;
    apply_config(parse_kv_text(text), mc2, tc2);
    CHECK(mc2.K == mc.K);
    CHECK(tc2.lr == tc.lr);
    CHECK(tc2.vpt == tc.vpt);

    CHECK_THROWS_AS(apply_config(parse_kv_text("no_such_key=1"), mc, tc),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_config(parse_kv_text("K=abc"), mc, tc),
                    std::invalid_argument);
}

TEST_CASE("train: early stopping fires after `patience` non-improving epochs") {
    // Tiny dataset, lr large enough to keep val moving; probe the stop rule
    // directly by replaying the recorded history.
    ModelConfig cfg = tiny_config();
    TrainConfig tc = tiny_train();
    tc.epochs = 10;
    tc.patience = 2;
    Tensor vals = synth_ar_values(400, cfg.K, 0.8, 4);
    TimeSeriesDataset ds = dataset_from_values(vals);
    TrainResult r = train(cfg, tc, ds);
    REQUIRE(!r.history.empty());
    // best epoch is the argmin of recorded val MSE
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < r.history.size(); ++i)
        if (r.history[i].val_mse < r.history[argmin].val_mse) argmin = i;
    CHECK(r.best_epoch == r.history[argmin].epoch);
    // stopping rule: we never continue more than `patience` epochs past best
    CHECK(r.history.size() <= argmin + 1 + tc.patience);
    CHECK(r.state.trained);
    CHECK(r.state.best_val == doctest::Approx(r.history[argmin].val_mse));
}

TEST_CASE("train: lr=0 freezes weights but the cost graph still moves") {
    ModelConfig cfg = tiny_config(3);
    TrainConfig tc = tiny_train();
    tc.lr = 0.0;
    tc.epochs = 1;
    Tensor vals = synth_ar_values(400, cfg.K, 0.7, 5);
    TimeSeriesDataset ds = dataset_from_values(vals);

    Model fresh = build_model(cfg);
    TrainResult r = train(cfg, tc, ds);
    auto& after = r.state.model.params.entries();
    auto& init = fresh.params.entries();
    for (std::size_t i = 0; i < after.size(); ++i)
        for (std::size_t j = 0; j < after[i].second->val.numel(); ++j)
            CHECK(after[i].second->val[j] == init[i].second->val[j]);
    CHECK(r.state.graph.update_count > 0);
    double p_mass = 0.0;
    for (std::size_t i = 0; i < r.state.graph.P.numel(); ++i)
        p_mass += std::abs(r.state.graph.P[i]);
    CHECK(p_mass > 0.0);
}

TEST_CASE("train: full run is deterministic") {
    ModelConfig cfg = tiny_config();
    TrainConfig tc = tiny_train();
    Tensor vals = synth_ar_values(400, cfg.K, 0.8, 6);
    TimeSeriesDataset ds = dataset_from_values(vals);
    TrainResult a = train(cfg, tc, ds);
    TrainResult b = train(cfg, tc, ds);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_mse == b.history[i].val_mse);
    }
    auto& pa = a.state.model.params.entries();
    auto& pb = b.state.model.params.entries();
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pa[i].second->val.numel(); ++j)
            CHECK(pa[i].second->val[j] == pb[i].second->val[j]);
}

TEST_CASE("train: learnable sinusoid beats persistence") {
    ModelConfig cfg;
    cfg.K = 2;
    cfg.L = 24;
    cfg.T = 8;
    cfg.s = 8;
    cfg.d_model = 16;
    cfg.N = 1;
    cfg.d_state = 4;
    cfg.dropout_rate = 0.0;
    cfg.seed = 1;
    TrainConfig tc;
    tc.lr = 2e-3;
    tc.batch_size = 16;
    tc.epochs = 6;
    tc.patience = 6;
    tc.vpt = false;

    const std::size_t steps = 400;
    Tensor vals({steps, 2});
    for (std::size_t t = 0; t < steps; ++t) {
        vals.at({t, 0}) = std::sin(2.0 * M_PI * t / 24.0);
        vals.at({t, 1}) = std::cos(2.0 * M_PI * t / 24.0) + 0.3;
    }
    TimeSeriesDataset ds = dataset_from_values(vals);
    TrainResult r = train(cfg, tc, ds);
    EvalResult test = evaluate(r.state, ds, Split::test);
    BaselineResult base = persistence_baseline(ds, Split::test, cfg.L, cfg.T);
    CHECK(test.mse < base.mse);
}

TEST_CASE("evaluate: untrained state is rejected") {
    TrainState st = make_train_state(tiny_config());
    Tensor vals = synth_ar_values(300, 2, 0.5, 7);
    TimeSeriesDataset ds = dataset_from_values(vals);
    CHECK_THROWS_AS(evaluate(st, ds, Split::test), std::runtime_error);
}

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
    TempDir tmp;
    ModelConfig cfg = tiny_config();
    TrainConfig tc = tiny_train();
    Tensor vals = synth_ar_values(400, cfg.K, 0.8, 8);
    TimeSeriesDataset ds = dataset_from_values(vals);
    TrainResult r = train(cfg, tc, ds);

    save_checkpoint(r.state, tc, tmp.file("a.ckpt"));
    LoadedCheckpoint lc = load_checkpoint(tmp.file("a.ckpt"));
    save_checkpoint(lc.state, lc.train_config, tmp.file("b.ckpt"));
    CHECK(read_all(tmp.file("a.ckpt")) == read_all(tmp.file("b.ckpt")));

    // the reloaded model must evaluate identically
    EvalResult e1 = evaluate(r.state, ds, Split::test);
    EvalResult e2 = evaluate(lc.state, ds, Split::test);
    CHECK(e1.mse == e2.mse);
    CHECK(e1.mae == e2.mae);
}

TEST_CASE("checkpoint: header layout starts with magic and version") {
    TempDir tmp;
    TrainState st = make_train_state(tiny_config());
    st.trained = true;
    save_checkpoint(st, tiny_train(), tmp.file("h.ckpt"));
    std::string bytes = read_all(tmp.file("h.ckpt"));
    REQUIRE(bytes.size() > 8);
    CHECK(bytes.substr(0, 4) == "SSMF");
    // version 1, little-endian u32
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[5]) == 0);
    CHECK(static_cast<unsigned char>(bytes[6]) == 0);
    CHECK(static_cast<unsigned char>(bytes[7]) == 0);
}

TEST_CASE("checkpoint: corruption and truncation are rejected loudly") {
    TempDir tmp;
    TrainState st = make_train_state(tiny_config());
    st.trained = true;
    save_checkpoint(st, tiny_train(), tmp.file("c.ckpt"));

    std::string bytes = read_all(tmp.file("c.ckpt"));
    std::ofstream bad(tmp.file("bad_magic.ckpt"), std::ios::binary);
    bad << "XXXX" << bytes.substr(4);
    bad.close();
    CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("bad_magic.ckpt")),
                         doctest::Contains("magic"), std::runtime_error);

    std::ofstream trunc(tmp.file("trunc.ckpt"), std::ios::binary);
    trunc << bytes.substr(0, bytes.size() / 2);
    trunc.close();
    CHECK_THROWS_AS(load_checkpoint(tmp.file("trunc.ckpt")),
                    std::runtime_error);
    CHECK_THROWS_AS(load_checkpoint(tmp.file("nope.ckpt")),
                    std::runtime_error);
}
