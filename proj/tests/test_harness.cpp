#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <numeric>
#include <set>

#include "shgn/checkpoint.hpp"
#include "shgn/error.hpp"
#include "shgn/pipeline.hpp"
#include "shgn/trainer.hpp"
#include "test_support.hpp"

using namespace shgn;
using shgn::test::data_path;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config() {
    TrainConfig c = toy_preset();
    c.model.dim = 8;
    c.model.heads = 2;
    c.model.dec_layers = 1;
    c.model.ffn_dim = 16;
    c.batch_size = 4;
    c.epochs = 2;
    c.warmup_steps = 5;
    c.knowledge_path = data_path("toy/knowledge.tsv").string();
    c.parses_path = data_path("toy/parses.conllu").string();
    c.lexicon_path = data_path("toy/lexicon.tsv").string();
    return c;
}

struct Toy {
    TrainConfig config;
    std::vector<Story> stories;
    std::unique_ptr<ShgnModel> model;
    std::unique_ptr<ExampleBuilder> builder;
    std::vector<Example> examples;

    explicit Toy(TrainConfig c, std::size_t n = 12) : config(std::move(c)) {
        stories = load_stories(data_path("toy/train.jsonl"));
        stories.resize(n);
        model = std::make_unique<ShgnModel>(config.model, Vocab::build(stories, 1), nullptr, config.seed);
        builder = std::make_unique<ExampleBuilder>(load_resources(config), config.model, model->vocab());
        examples = build_examples(*builder, stories);
    }
};

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("shgn_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<double> flat_logits(const ShgnModel& m, const Example& ex) {
    NoGradGuard guard;
    const Tensor l = m.decoder().forward(m.encode(ex.graph), ex.decoder_input);
    return {l.data().begin(), l.data().end()};
}

}  // namespace

TEST_CASE("learning-rate schedule") {
    CHECK(lr_schedule(0, 5e-5, 1000) == 0.0);
    CHECK(lr_schedule(500, 5e-5, 1000) == doctest::Approx(2.5e-5).epsilon(1e-15));
    CHECK(lr_schedule(1000, 5e-5, 1000) == 5e-5);
    CHECK(lr_schedule(5000, 5e-5, 1000) == 5e-5);
    CHECK(lr_schedule(3, 1.0, 0) == 1.0);
}

TEST_CASE("Adam first step moves by lr times the gradient sign") {
    ParamStore ps;
    Rng rng(1);
    Tensor w = ps.add("w", {1, 3}, Init::Zeros, rng);
    w.node()->ensure_grad() = {0.5, -2.0, 0.0};
    Adam adam(0.9, 0.999, 1e-8);
    adam.step(ps, 0.1);
    CHECK(w.data()[0] == doctest::Approx(-0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    CHECK(w.data()[1] == doctest::Approx(0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
    CHECK(w.data()[2] == 0.0);
    CHECK(adam.state().t == 1);

    // Second step with the same gradient: bias-corrected moments are unchanged.
    adam.step(ps, 0.1);
    CHECK(w.data()[0] == doctest::Approx(-0.2).epsilon(1e-7));
}

TEST_CASE("gradient clipping by global norm") {
    ParamStore ps;
    Rng rng(1);
    Tensor a = ps.add("a", {1, 1}, Init::Zeros, rng);
    Tensor b = ps.add("b", {1, 1}, Init::Zeros, rng);
    a.node()->ensure_grad() = {3.0};
    b.node()->ensure_grad() = {4.0};
    CHECK(grad_norm(ps) == 5.0);
    CHECK(clip_grad_norm(ps, 10.0) == 5.0);
    CHECK(a.grad()[0] == 3.0);
    CHECK(clip_grad_norm(ps, 1.0) == 5.0);
    CHECK(a.grad()[0] == doctest::Approx(0.6));
    CHECK(b.grad()[0] == doctest::Approx(0.8));
    CHECK(grad_norm(ps) == doctest::Approx(1.0));
}

TEST_CASE("batches partition the examples by node count") {
    const Toy toy(small_config());
    Rng rng(3);
    const auto batches = make_batches(toy.examples, 5, rng);
    std::multiset<std::size_t> seen;
    for (const auto& b : batches) {
        CHECK(b.size() <= 5);
        seen.insert(b.begin(), b.end());
    }
    CHECK(seen.size() == toy.examples.size());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == toy.examples.size());
    // Every example in one batch has at most as many nodes as any example in a later bucket.
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (const auto& b : batches) {
        std::size_t lo = SIZE_MAX, hi = 0;
        for (std::size_t i : b) {
            lo = std::min(lo, toy.examples[i].graph.num_nodes());
            hi = std::max(hi, toy.examples[i].graph.num_nodes());
        }
        ranges.emplace_back(lo, hi);
    }
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i) CHECK(ranges[i - 1].second <= ranges[i].first);
    Rng again(3);
    CHECK(make_batches(toy.examples, 5, again) == batches);
    CHECK_THROWS_AS(make_batches(toy.examples, 0, again), Error);
}

TEST_CASE("configuration JSON round trip and presets") {
    TrainConfig c = small_config();
    c.weights = {0.2, 0.3};
    c.model.graph.include_words = false;
    c.model.clue_mode = ClueMode::ExactlyTwo;
    c.single_task = true;
    const auto j = to_json(c);
    const TrainConfig back = train_config_from_json(nlohmann::json::parse(j.dump()));
    CHECK(to_json(back) == j);
    CHECK(config_hash(back.model) == config_hash(c.model));

    const TrainConfig paper = paper_preset();
    CHECK(paper.batch_size == 64);
    CHECK(paper.base_lr == 5e-5);
    CHECK(paper.epochs == 15);
    CHECK(paper.warmup_steps == 1000);
    CHECK(paper.weights == LossWeights{0.1, 0.1});
    CHECK(paper.model.graph_layers == 1);
    CHECK(paper.model.max_ending_len == 20);
    CHECK(paper.beam_size == 5);
    const TrainConfig toy = toy_preset();
    CHECK(toy.model.dim == 64);
    CHECK(toy.model.heads == 4);
    CHECK(toy.model.dec_layers == 2);
    CHECK(toy.model.initializer == InitializerKind::Hash);
    CHECK_THROWS_AS(preset_by_name("huge"), Error);

    // Flags in a file override the preset they name.
    const TrainConfig layered = train_config_from_json(nlohmann::json::parse(R"({"preset":"toy","model":{"dim":32}})"));
    CHECK(layered.model.dim == 32);
    CHECK(layered.model.dec_layers == 2);

    ModelConfig m = toy.model;
    const std::string h = config_hash(m);
    CHECK(h.size() == 16);
    m.graph.include_global = false;
    CHECK(config_hash(m) != h);
    TrainConfig other = toy;
    other.base_lr = 1.0;
    CHECK(config_hash(other.model) == h);

    TrainConfig bad = toy;
    bad.weights = {0.7, 0.7};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = toy;
    bad.model.heads = 5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("example construction") {
    TrainConfig c = small_config();
    c.model.max_ending_len = 4;
    const Toy toy(c, 2);
    const Example& ex = toy.examples[0];
    CHECK(ex.id == "toy001");
    CHECK(ex.decoder_input.front() == Vocab::kBos);
    CHECK(ex.targets.back() == Vocab::kEos);
    CHECK(ex.decoder_input.size() == 5);
    CHECK(ex.targets.size() == 5);
    for (std::size_t i = 1; i < ex.decoder_input.size(); ++i) CHECK(ex.decoder_input[i] == ex.targets[i - 1]);
    CHECK(ex.sentiment == Sentiment::Positive);
    REQUIRE(ex.clue_targets);
    CHECK(ex.clue_targets->size() == ex.graph.nodes_of_type(NodeType::Word).size());

    // Labels stored on the story win over computed ones.
    Story s = toy.stories[0];
    s.sentiment = Sentiment::Neutral;
    CHECK(toy.builder->build(s).sentiment == Sentiment::Neutral);
    Resources r = load_resources(c);
    r.label_cache["toy001"] = StoryLabels{Sentiment::Negative, *toy.builder->labeled(toy.stories[0]).clue_flags};
    const ExampleBuilder cached(std::move(r), c.model, toy.model->vocab());
    CHECK(cached.build(toy.stories[0]).sentiment == Sentiment::Negative);

    // Missing clue labels are an error only when the clue loss is weighted.
    Resources bare;
    bare.knowledge = load_knowledge(data_path("toy/knowledge.tsv"));
    const ExampleBuilder no_parses(std::move(bare), c.model, toy.model->vocab());
    const Example unlabeled = no_parses.build(toy.stories[0]);
    CHECK_FALSE(unlabeled.clue_targets);
    CHECK_THROWS_AS(toy.model->losses(unlabeled, {0.1, 0.1}), Error);
    CHECK_NOTHROW(toy.model->losses(unlabeled, {0.1, 0.0}));
    const Story no_end = make_story("x", {"A cat sat."}, std::nullopt);
    CHECK(no_parses.build(no_end).decoder_input.empty());
    CHECK_THROWS_AS(toy.model->losses(no_parses.build(no_end), {}), Error);
}

TEST_CASE("checkpoint round trip is bit-identical") {
    Toy toy(small_config(), 4);
    Trainer trainer(toy.config, *toy.model);
    std::vector<const Example*> batch{&toy.examples[0], &toy.examples[1]};
    (void)trainer.step(batch, 1);

    const fs::path dir = temp_dir("ckpt");
    save_checkpoint(dir / "m.ckpt", *toy.model, trainer.steps(), &trainer.optimizer().state(), &toy.config);
    CHECK_FALSE(fs::exists(dir / "m.ckpt.tmp"));
    const Checkpoint ck = load_checkpoint(dir / "m.ckpt");
    CHECK(ck.step == 1);
    REQUIRE(ck.optimizer);
    CHECK(ck.optimizer->t == 1);
    CHECK(ck.optimizer->m == trainer.optimizer().state().m);
    CHECK(ck.optimizer->v == trainer.optimizer().state().v);
    REQUIRE(ck.train_config);
    CHECK(to_json(train_config_from_json(*ck.train_config)) == to_json(toy.config));

    const auto restored = model_from_checkpoint(ck);
    for (const Example& ex : toy.examples) CHECK(flat_logits(*restored, ex) == flat_logits(*toy.model, ex));
    for (const auto& [name, t] : toy.model->params().all()) {
        const auto a = t.data();
        const auto b = restored->params().get(name).data();
        CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }

    SUBCASE("config hash mismatch is reported") {
        Checkpoint bad = ck;
        bad.config_hash = "0000000000000000";
        CHECK_THROWS_WITH_AS(restore_params(*toy.model, bad), doctest::Contains("hash"), Error);
        TrainConfig wider = toy.config;
        wider.model.graph.include_knowledge = false;
        ShgnModel other(wider.model, toy.model->vocab(), nullptr, 1);
        CHECK_THROWS_AS(restore_params(other, ck), Error);
    }
    SUBCASE("vocabulary and parameter mismatches are reported") {
        Checkpoint bad = ck;
        bad.vocab.push_back("extra");
        CHECK_THROWS_AS(restore_params(*toy.model, bad), Error);
        bad = ck;
        bad.params.erase("dec.out");
        CHECK_THROWS_AS(restore_params(*toy.model, bad), Error);
        bad = ck;
        bad.params["ghost"] = {Shape{1, 1}, {0.0}};
        CHECK_THROWS_AS(restore_params(*toy.model, bad), Error);
        bad = ck;
        bad.params["dec.out"].first = Shape{1, 1};
        CHECK_THROWS_AS(restore_params(*toy.model, bad), ShapeError);
    }
    SUBCASE("tampered files are rejected") {
        std::string text = test::read_text(dir / "m.ckpt");
        const auto pos = text.find("\"dim\":8");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 7, "\"dim\":6");
        std::ofstream(dir / "bad.ckpt") << text;
        CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), Error);
        std::ofstream(dir / "junk.ckpt") << "{}";
        CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), Error);
    }
    fs::remove_all(dir);
}

TEST_CASE("logged loss is the weighted sum at every step") {
    TrainConfig c = small_config();
    c.epochs = 10;
    Toy toy(c, 8);
    Trainer trainer(c, *toy.model);
    std::vector<StepRecord> records;
    TrainerHooks hooks;
    hooks.on_step = [&](const StepRecord& r) { records.push_back(r); };
    (void)trainer.run(toy.examples, {}, hooks);
    REQUIRE(records.size() == 20);
    for (const StepRecord& r : records) {
        CHECK(std::abs(r.loss - (0.1 * r.sentiment + 0.1 * r.clue + 0.8 * r.generation)) < 1e-9);
        CHECK(r.sentiment > 0.0);
        CHECK(r.clue > 0.0);
        CHECK(r.lr == lr_schedule(r.step, c.base_lr, c.warmup_steps));
    }
}

TEST_CASE("zero auxiliary weights leave encoder gradients bit-identical to single-task training") {
    TrainConfig c = small_config();
    Toy multi(c, 3), single(c, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        multi.model->params().zero_grad();
        single.model->params().zero_grad();
        multi.model->losses(multi.examples[i], {0.0, 0.0}).total.backward();
        single.model->losses(single.examples[i], {0.0, 0.0}, true).total.backward();
        for (const auto& [name, t] : multi.model->params().all()) {
            if (name.rfind("hgt.", 0) != 0 && name.rfind("dec.", 0) != 0) continue;
            const auto a = t.grad();
            const auto b = single.model->params().get(name).grad();
            CHECK_MESSAGE(std::equal(a.begin(), a.end(), b.begin(), b.end()), name);
        }
    }
}

TEST_CASE("seeded training is reproducible") {
    TrainConfig c = small_config();
    c.epochs = 3;
    auto trajectory = [&] {
        Toy toy(c, 8);
        Trainer trainer(c, *toy.model);
        std::vector<double> losses;
        TrainerHooks hooks;
        hooks.on_step = [&](const StepRecord& r) { losses.push_back(r.loss); };
        (void)trainer.run(toy.examples, {}, hooks);
        return losses;
    };
    const auto a = trajectory();
    const auto b = trajectory();
    REQUIRE(a.size() == 6);
    CHECK(a == b);
    c.seed = 99;
    CHECK(trajectory() != a);
}

TEST_CASE("trainer writes logs and checkpoints") {
    TrainConfig c = small_config();
    c.epochs = 2;
    c.out_dir = temp_dir("run").string();
    Toy toy(c, 8);
    const std::vector<Example> valid(toy.examples.begin(), toy.examples.begin() + 2);
    Trainer trainer(c, *toy.model);
    const TrainResult r = trainer.run(toy.examples, valid);
    CHECK(r.epochs == 2);
    CHECK(r.steps == 4);
    CHECK(fs::exists(fs::path(c.out_dir) / "best.ckpt"));
    CHECK(fs::exists(fs::path(c.out_dir) / "last.ckpt"));
    std::ifstream log(fs::path(c.out_dir) / "train_log.jsonl");
    std::size_t steps = 0, epochs = 0;
    for (std::string line; std::getline(log, line);) {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("kind")) {
            ++epochs;
            CHECK(j.contains("valid_L_gen"));
        } else {
            ++steps;
            for (const char* k : {"step", "lr", "L", "L_gen", "L_sen", "L_clu"}) CHECK(j.contains(k));
        }
    }
    CHECK(steps == 4);
    CHECK(epochs == 2);
    CHECK(load_checkpoint(fs::path(c.out_dir) / "last.ckpt").step == 4);
    fs::remove_all(c.out_dir);
}

TEST_CASE("non-finite loss aborts with a diagnostics dump") {
    TrainConfig c = small_config();
    c.out_dir = temp_dir("diverge").string();
    Toy toy(c, 2);
    Tensor w = toy.model->params().get("dec.out");
    w.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
    Trainer trainer(c, *toy.model);
    std::vector<const Example*> batch{&toy.examples[0]};
    CHECK_THROWS_AS(trainer.step(batch, 1), TrainingDiverged);
    const auto dump = nlohmann::json::parse(test::read_text(fs::path(c.out_dir) / "diverged.json"));
    CHECK(dump["example"] == "toy001");
    CHECK(dump["params"]["dec.out"]["finite"] == false);
    fs::remove_all(c.out_dir);
}
