#include <doctest.h>

#include <random>

#include "mixopt/balance.hpp"
#include "mixopt/error.hpp"
#include "mixopt/experiment.hpp"
#include "mixopt/synthetic.hpp"
#include "mixopt/trainer.hpp"
#include "support.hpp"

using namespace mixopt;

namespace {

struct Fixture {
    Corpus corpus;
    Partition partition;
    MixtureWeights p_eval;
};

Fixture small_task(std::uint64_t seed) {
    synthetic::NoisyDomainOptions opts;
    opts.train_per_domain = 60;
    opts.eval_per_domain = 20;
    Corpus corpus = synthetic::noisy_domain_corpus(opts, seed);
    ExperimentConfig cfg;
    cfg.fixed_k = 4;
    cfg.train.seed = seed;
    Partition partition = regroup_stage(corpus, cfg).partition;
    MixtureWeights p = eval_proportions(corpus, partition);
    return {std::move(corpus), std::move(partition), std::move(p)};
}

TrainConfig quick_config(Strategy s) {
    TrainConfig c;
    c.strategy = s;
    c.rounds = 3;
    c.steps_per_round = 5;
    c.batch_size = 8;
    return c;
}

}  // namespace

TEST_CASE("strategy names round trip") {
    for (Strategy s : {Strategy::stratified, Strategy::multiplicative_weights, Strategy::randb}) {
        CHECK(parse_strategy(to_string(s)) == s);
    }
    CHECK_THROWS_AS(parse_strategy("greedy"), ConfigError);
}

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.rounds = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.lambda = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.steps_per_round = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("sampling from a one-hot mixture") {
    std::mt19937_64 rng(1);
    const std::vector<std::vector<std::size_t>> members = {{0, 1, 2}, {3, 4}};
    const auto batch = sample_batch(members, MixtureWeights({1.0, 0.0}), 64, rng);
    CHECK(batch.size() == 64);
    for (const auto& s : batch) {
        CHECK(s.cluster == 0);
        CHECK(s.row <= 2);
    }
}

TEST_CASE("uniform sampling stays within the binomial band") {
    std::mt19937_64 rng(2);
    const std::vector<std::vector<std::size_t>> members = {{0}, {1}};
    const auto batch = sample_batch(members, MixtureWeights::uniform(2), 10000, rng);
    const auto zeros = std::count_if(batch.begin(), batch.end(), [](const SampledExample& s) { return s.cluster == 0; });
    CHECK(zeros >= 4700);
    CHECK(zeros <= 5300);
}

TEST_CASE("empty batches and empty clusters") {
    std::mt19937_64 rng(3);
    const std::vector<std::vector<std::size_t>> members = {{0}, {}};
    CHECK(sample_batch(members, MixtureWeights({1.0, 0.0}), 0, rng).empty());
    CHECK_THROWS_AS(sample_batch(members, MixtureWeights::uniform(2), 4, rng), DataError);
}

TEST_CASE("no steps leaves the model untouched") {
    const Fixture f = small_task(5);
    const TrainingData data = make_training_data(f.corpus, f.partition);
    const ToyModel model = ToyModel::initialize({f.corpus.d_emb(), 16, data.num_classes}, LossKind::cross_entropy, 5);
    TrainConfig c = quick_config(Strategy::stratified);
    c.rounds = 1;
    c.steps_per_round = 0;
    const TrainingResult r = run_training(data, c, f.p_eval, model);
    CHECK(r.model.parameters() == model.parameters());
    REQUIRE(r.logs.size() == 1);
    CHECK(r.logs[0].weights_used == MixtureWeights::uniform(4));
}

TEST_CASE("stratified keeps uniform weights in every round") {
    const Fixture f = small_task(6);
    const auto r = run_training(f.corpus, f.partition, quick_config(Strategy::stratified), f.p_eval);
    REQUIRE(r.logs.size() == 3);
    for (const auto& log : r.logs) CHECK(log.weights_used == MixtureWeights::uniform(4));
}

TEST_CASE("training is bit-reproducible") {
    const Fixture f = small_task(7);
    for (Strategy s : {Strategy::stratified, Strategy::multiplicative_weights, Strategy::randb}) {
        const auto a = run_training(f.corpus, f.partition, quick_config(s), f.p_eval);
        const auto b = run_training(f.corpus, f.partition, quick_config(s), f.p_eval);
        CHECK(a.model.parameters() == b.model.parameters());
        for (std::size_t t = 0; t < a.logs.size(); ++t) {
            CHECK(a.logs[t].weights_used == b.logs[t].weights_used);
            CHECK(a.logs[t].gram == b.logs[t].gram);
            CHECK(a.logs[t].eval_loss_weighted == b.logs[t].eval_loss_weighted);
        }
    }
}

TEST_CASE("round logs are consistent") {
    const Fixture f = small_task(8);
    const auto r = run_training(f.corpus, f.partition, quick_config(Strategy::randb), f.p_eval);
    for (std::size_t t = 0; t < r.logs.size(); ++t) {
        const RoundLog& log = r.logs[t];
        CHECK(log.round == static_cast<int>(t));
        CHECK(on_simplex(log.weights_used.span()));
        CHECK(log.gram.rows() == 4);
        double weighted = 0.0;
        for (int c = 0; c < 4; ++c) weighted += f.p_eval[c] * log.eval_loss_per_cluster[c];
        CHECK(log.eval_loss_weighted == doctest::Approx(weighted).epsilon(1e-14));
        CHECK_FALSE(log.degenerate_update);
    }
    // The next round's weights are the R&B update of this round's Gram matrix.
    const auto expect = randb_update(r.logs[0].gram, f.p_eval, 3.0);
    REQUIRE(expect.has_value());
    for (int c = 0; c < 4; ++c) CHECK(r.logs[1].weights_used[c] == doctest::Approx((*expect)[c]).epsilon(1e-15));
}

TEST_CASE("zero-norm update carries weights forward") {
    const Fixture f = small_task(9);
    TrainConfig c = quick_config(Strategy::randb);
    c.steps_per_round = 0;
    const auto r = run_training(f.corpus, f.partition, c, f.p_eval);
    for (const auto& log : r.logs) {
        CHECK(log.gram.isZero(0.0));
        CHECK(log.degenerate_update);
        CHECK(log.weights_used == MixtureWeights::uniform(4));
    }
}

TEST_CASE("a cluster with no members is never sampled") {
    const Fixture f = small_task(10);
    TrainingData data = make_training_data(f.corpus, f.partition);
    data.m = 5;
    data.members.emplace_back();
    data.eval_inputs.emplace_back(0, f.corpus.d_emb());
    data.eval_targets.emplace_back();
    std::vector<double> p = f.p_eval.values();
    p.push_back(0.0);
    const ToyModel model = ToyModel::initialize({f.corpus.d_emb(), 8, data.num_classes}, LossKind::cross_entropy, 1);
    const auto r = run_training(data, quick_config(Strategy::randb), MixtureWeights(p), model);
    for (const auto& log : r.logs) {
        CHECK(log.weights_used[4] == 0.0);
        CHECK(log.gram.row(4).isZero(0.0));
        CHECK(log.gram.col(4).isZero(0.0));
    }
}

TEST_CASE("divergence reports the round") {
    const Fixture f = small_task(11);
    TrainConfig c = quick_config(Strategy::stratified);
    c.learning_rate = 1e308;
    try {
        run_training(f.corpus, f.partition, c, f.p_eval);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.round() == 0);
    }
}

TEST_CASE("training data requires targets and coverage") {
    const Fixture f = small_task(12);
    std::vector<Example> examples = f.corpus.examples();
    examples.front().target.reset();
    CHECK_THROWS_AS(make_training_data(Corpus(examples, f.corpus.d_emb()), f.partition), DataError);

    Partition partial = f.partition;
    partial.eval_ids.pop_back();
    partial.eval_labels.pop_back();
    CHECK_THROWS_AS(make_training_data(f.corpus, partial), DataError);
}

TEST_CASE("round CSV round trip") {
    testing::TempDir dir("trainer");
    const Fixture f = small_task(13);
    const auto r = run_training(f.corpus, f.partition, quick_config(Strategy::multiplicative_weights), f.p_eval);
    write_round_csv(r.logs, dir / "rounds.csv");
    const auto back = read_round_csv(dir / "rounds.csv");
    REQUIRE(back.size() == r.logs.size());
    for (std::size_t t = 0; t < back.size(); ++t) {
        CHECK(back[t].round == r.logs[t].round);
        CHECK(back[t].weights_used == r.logs[t].weights_used);
        CHECK(back[t].train_loss == r.logs[t].train_loss);
        CHECK(back[t].eval_loss_weighted == r.logs[t].eval_loss_weighted);
        CHECK(back[t].eval_loss_per_cluster == r.logs[t].eval_loss_per_cluster);
    }
}
