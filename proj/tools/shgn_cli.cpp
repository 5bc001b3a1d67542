#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "shgn/auxtasks.hpp"
#include "shgn/checkpoint.hpp"
#include "shgn/config.hpp"
#include "shgn/error.hpp"
#include "shgn/metrics.hpp"
#include "shgn/pipeline.hpp"
#include "shgn/trainer.hpp"

using namespace shgn;
namespace fs = std::filesystem;

namespace {

// Flags shared by the commands that need a configuration. Each value is applied only
// when the flag was given, so the layering is preset < --config file < flags.
struct ConfigFlags {
    std::string preset, config;
    TrainConfig v;
    std::string initializer, clue_mode;
    bool no_global = false, no_knowledge = false, no_word = false, no_aux = false;
    std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> setters;
    std::vector<CLI::Option*> model_options;

    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& name, T& slot, T TrainConfig::*member, const std::string& help) {
        CLI::Option* o = app->add_option(name, slot, help);
        setters.emplace_back(o, [&slot, member](TrainConfig& c) { c.*member = slot; });
        return o;
    }

    template <class T>
    CLI::Option* add_model(CLI::App* app, const std::string& name, T& slot, T ModelConfig::*member,
                           const std::string& help) {
        CLI::Option* o = app->add_option(name, slot, help);
        setters.emplace_back(o, [&slot, member](TrainConfig& c) { c.model.*member = slot; });
        model_options.push_back(o);
        return o;
    }

    void add_paths(CLI::App* app, bool training) {
        if (training) {
            add(app, "--train", v.train_path, &TrainConfig::train_path, "training stories (JSONL)");
            add(app, "--valid", v.valid_path, &TrainConfig::valid_path, "validation stories (JSONL)");
            add(app, "--lexicon", v.lexicon_path, &TrainConfig::lexicon_path, "sentiment lexicon (TSV)");
            add(app, "--labels", v.labels_path, &TrainConfig::labels_path, "label cache (JSONL)");
            add(app, "--out-dir", v.out_dir, &TrainConfig::out_dir, "output directory");
        }
        add(app, "--knowledge", v.knowledge_path, &TrainConfig::knowledge_path, "knowledge edges (TSV)");
        add(app, "--parses", v.parses_path, &TrainConfig::parses_path, "dependency parses (CoNLL-U)");
        add(app, "--stopwords", v.stopwords_path, &TrainConfig::stopwords_path, "stopword list");
        add(app, "--embeddings", v.embeddings_path, &TrainConfig::embeddings_path, "node embedding table");
    }

    void add_model_flags(CLI::App* app) {
        app->add_option("--preset", preset, "paper or toy");
        app->add_option("--config", config, "JSON configuration file");
        add_model(app, "--dim", v.model.dim, &ModelConfig::dim, "hidden size");
        add_model(app, "--heads", v.model.heads, &ModelConfig::heads, "attention heads");
        add_model(app, "--graph-layers", v.model.graph_layers, &ModelConfig::graph_layers, "graph layers");
        add_model(app, "--dec-layers", v.model.dec_layers, &ModelConfig::dec_layers, "decoder layers");
        add_model(app, "--ffn-dim", v.model.ffn_dim, &ModelConfig::ffn_dim, "feed-forward width (0: 4*dim)");
        add_model(app, "--max-ending-len", v.model.max_ending_len, &ModelConfig::max_ending_len, "ending token cap");
        add_model(app, "--init-seed", v.model.init_seed, &ModelConfig::init_seed, "hash initializer seed");
        add_model(app, "--min-freq", v.model.vocab_min_freq, &ModelConfig::vocab_min_freq, "vocabulary min count");
        CLI::Option* sa = app->add_flag("--scaled-attention", v.model.scaled_attention, "scale graph attention");
        setters.emplace_back(sa, [this](TrainConfig& c) { c.model.scaled_attention = v.model.scaled_attention; });
        model_options.push_back(sa);
        CLI::Option* init = app->add_option("--initializer", initializer, "hash or table")
                                ->check(CLI::IsMember({"hash", "table"}));
        setters.emplace_back(init, [this](TrainConfig& c) {
            c.model.initializer = initializer == "hash" ? InitializerKind::Hash : InitializerKind::Table;
        });
        model_options.push_back(init);
        CLI::Option* cm = app->add_option("--clue-mode", clue_mode, "top2 or exactly2")
                              ->check(CLI::IsMember({"top2", "exactly2"}));
        setters.emplace_back(cm, [this](TrainConfig& c) {
            c.model.clue_mode = clue_mode == "top2" ? ClueMode::TopTwoRanks : ClueMode::ExactlyTwo;
        });
        model_options.push_back(cm);
        struct Ablation {
            const char* name;
            bool* slot;
            bool GraphOptions::*member;
            const char* help;
        };
        for (const Ablation& a : {Ablation{"--no-global", &no_global, &GraphOptions::include_global, "drop the global node"},
                                  Ablation{"--no-knowledge", &no_knowledge, &GraphOptions::include_knowledge,
                                           "drop knowledge nodes"},
                                  Ablation{"--no-word", &no_word, &GraphOptions::include_words, "drop word nodes"}}) {
            CLI::Option* o = app->add_flag(a.name, *a.slot, a.help);
            setters.emplace_back(o, [member = a.member](TrainConfig& c) { c.model.graph.*member = false; });
            model_options.push_back(o);
        }
    }

    void add_train_flags(CLI::App* app) {
        add(app, "--batch-size", v.batch_size, &TrainConfig::batch_size, "stories per step");
        add(app, "--lr", v.base_lr, &TrainConfig::base_lr, "peak learning rate");
        add(app, "--epochs", v.epochs, &TrainConfig::epochs, "training epochs");
        add(app, "--warmup", v.warmup_steps, &TrainConfig::warmup_steps, "linear warm-up steps");
        add(app, "--seed", v.seed, &TrainConfig::seed, "random seed");
        add(app, "--grad-clip", v.grad_clip, &TrainConfig::grad_clip, "global-norm clip (0 disables)");
        add(app, "--adam-beta1", v.adam_beta1, &TrainConfig::adam_beta1, "Adam beta1");
        add(app, "--adam-beta2", v.adam_beta2, &TrainConfig::adam_beta2, "Adam beta2");
        add(app, "--adam-eps", v.adam_eps, &TrainConfig::adam_eps, "Adam epsilon");
        CLI::Option* l1 = app->add_option("--lambda1", v.weights.sentiment, "sentiment loss weight");
        setters.emplace_back(l1, [this](TrainConfig& c) { c.weights.sentiment = v.weights.sentiment; });
        CLI::Option* l2 = app->add_option("--lambda2", v.weights.clue, "clue loss weight");
        setters.emplace_back(l2, [this](TrainConfig& c) { c.weights.clue = v.weights.clue; });
        CLI::Option* det = app->add_flag("--deterministic", v.deterministic, "single-threaded execution");
        setters.emplace_back(det, [](TrainConfig& c) { c.deterministic = true; });
        CLI::Option* na = app->add_flag("--no-aux", no_aux, "generation loss only");
        setters.emplace_back(na, [](TrainConfig& c) {
            c.single_task = true;
            c.weights = {0.0, 0.0};
        });
    }

    void add_beam_flags(CLI::App* app) {
        add(app, "--beam", v.beam_size, &TrainConfig::beam_size, "beam size");
        CLI::Option* ln = app->add_flag("--length-norm", v.length_norm, "length-normalized beam scores");
        setters.emplace_back(ln, [](TrainConfig& c) { c.length_norm = true; });
    }

    bool model_overridden() const {
        if (!preset.empty() || !config.empty()) return true;
        for (CLI::Option* o : model_options)
            if (o->count() > 0) return true;
        return false;
    }

    TrainConfig resolve(TrainConfig base) const {
        TrainConfig c = preset.empty() ? std::move(base) : preset_by_name(preset);
        if (!config.empty()) c = load_train_config(config, c);
        for (const auto& [opt, set] : setters)
            if (opt->count() > 0) set(c);
        c.validate();
        return c;
    }

    TrainConfig resolve() const { return resolve(paper_preset()); }
};

void require_path(const std::string& path, const char* flag) {
    if (path.empty()) throw CLI::ValidationError(std::string(flag) + " is required");
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

const Story& find_story(const std::vector<Story>& stories, const std::string& id) {
    for (const Story& s : stories)
        if (s.id == id) return s;
    throw Error("no story with id '" + id + "'");
}

// ---- build-graph ---------------------------------------------------------------------

struct BuildGraphArgs {
    ConfigFlags cfg;
    std::string stories, id, out;
};

int run_build_graph(const BuildGraphArgs& a) {
    const TrainConfig c = a.cfg.resolve();
    const auto stories = load_stories(a.stories);
    const Vocab vocab;
    const ExampleBuilder builder(load_resources(c), c.model, vocab);
    auto graph_json = [&](const Story& s) {
        auto j = nlohmann::ordered_json::parse(builder.graph_for(s).to_json(-1));
        nlohmann::ordered_json concepts = nlohmann::ordered_json::array();
        for (const ConceptHit& h : builder.concepts_for(s))
            concepts.push_back({{"concept", h.concept_text}, {"source_sentences", h.source_sentences}});
        j["story"] = s.id;
        j["concepts"] = std::move(concepts);
        return j;
    };
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file = open_out(a.out);
        os = &file;
    }
    if (!a.id.empty()) {
        *os << graph_json(find_story(stories, a.id)).dump(2) << '\n';
    } else {
        for (const Story& s : stories) *os << graph_json(s).dump() << '\n';
    }
    return 0;
}

// ---- label ---------------------------------------------------------------------------

struct LabelArgs {
    ConfigFlags cfg;
    std::string stories, out;
};

int run_label(const LabelArgs& a) {
    const TrainConfig c = a.cfg.resolve();
    if (c.parses_path.empty()) throw CLI::ValidationError("--parses is required for clue labels");
    const auto stories = load_stories(a.stories);
    const Vocab vocab;
    const ExampleBuilder builder(load_resources(c), c.model, vocab);
    std::vector<Story> labeled;
    std::map<Sentiment, std::size_t> counts;
    std::size_t clues = 0, tokens = 0;
    for (const Story& s : stories) {
        labeled.push_back(builder.labeled(s));
        if (!labeled.back().sentiment) throw Error("story '" + s.id + "' has no ending to label");
        ++counts[*labeled.back().sentiment];
        for (const auto& sent : *labeled.back().clue_flags) {
            tokens += sent.size();
            clues += static_cast<std::size_t>(std::count(sent.begin(), sent.end(), true));
        }
    }
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    write_label_cache(a.out, labeled);
    std::printf("labeled %zu stories: %zu negative, %zu neutral, %zu positive; %zu of %zu tokens are clue words\n",
                labeled.size(), counts[Sentiment::Negative], counts[Sentiment::Neutral], counts[Sentiment::Positive],
                clues, tokens);
    return 0;
}

// ---- train ---------------------------------------------------------------------------

struct TrainArgs {
    ConfigFlags cfg;
    bool quiet = false;
};

int run_train(const TrainArgs& a) {
    const TrainConfig c = a.cfg.resolve();
    require_path(c.train_path, "--train");
    require_path(c.out_dir, "--out-dir");
    const auto train_stories = load_stories(c.train_path);
    const auto valid_stories = c.valid_path.empty() ? std::vector<Story>{} : load_stories(c.valid_path);

    ShgnModel model(c.model, Vocab::build(train_stories, c.model.vocab_min_freq), load_table(c), c.seed);
    const ExampleBuilder builder(load_resources(c), c.model, model.vocab());
    const auto train = build_examples(builder, train_stories);
    const auto valid = build_examples(builder, valid_stories);

    fs::create_directories(c.out_dir);
    nlohmann::ordered_json meta = to_json(c);
    meta["config_hash"] = config_hash(c.model);
    meta["vocab_size"] = model.vocab().size();
    meta["parameters"] = model.params().num_values();
    open_out(fs::path(c.out_dir) / "config.json") << meta.dump(2) << '\n';

    if (!a.quiet) {
        std::printf("config %s: %zu train / %zu valid stories, vocab %zu, %zu parameters\n", config_hash(c.model).c_str(),
                    train.size(), valid.size(), model.vocab().size(), model.params().num_values());
    }
    const auto start = std::chrono::steady_clock::now();
    TrainerHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& e) {
        if (!a.quiet) {
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::printf("epoch %3zu  step %6zu  L %.4f  L_gen %.4f  valid %.4f%s  (%.0fs)\n", e.epoch, e.step, e.train_loss,
                        e.train_generation, e.valid_generation, e.improved ? " *" : "", secs);
            std::fflush(stdout);
        }
        return false;
    };
    Trainer trainer(c, model, c.single_task);
    const TrainResult r = trainer.run(train, valid, hooks);
    if (!a.quiet) std::printf("finished %zu epochs, %zu steps; best L_gen %.4f\n", r.epochs, r.steps, r.best_valid_generation);
    return 0;
}

// ---- generate ------------------------------------------------------------------------

struct GenerateArgs {
    ConfigFlags cfg;
    std::string checkpoint, stories, out;
    bool greedy = false;
};

int run_generate(const GenerateArgs& a) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    TrainConfig base = ckpt.train_config ? train_config_from_json(*ckpt.train_config) : paper_preset();
    base.model = ckpt.model;
    const TrainConfig c = a.cfg.resolve(base);
    if (a.cfg.model_overridden() && config_hash(c.model) != ckpt.config_hash) {
        throw Error("config hash mismatch: checkpoint " + ckpt.config_hash + ", flags " + config_hash(c.model));
    }
    const auto model = model_from_checkpoint(ckpt, load_table(c));
    const ExampleBuilder builder(load_resources(c), model->config(), model->vocab());
    const BeamOptions opts = model->beam_options(c.beam_size, c.length_norm);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file = open_out(a.out);
        os = &file;
    }
    for (const Story& s : load_stories(a.stories)) {
        const HeteroGraph g = builder.graph_for(s);
        const GenerationResult r = a.greedy ? model->generate_greedy(g, opts) : model->generate(g, opts);
        nlohmann::ordered_json j;
        j["id"] = s.id;
        j["ending"] = detokenize(model->vocab().decode(r.tokens));
        j["score"] = r.score;
        nlohmann::ordered_json beams = nlohmann::ordered_json::array();
        for (const Hypothesis& h : r.beams)
            beams.push_back({{"text", detokenize(model->vocab().decode(h.tokens))}, {"score", h.score}});
        j["beams"] = std::move(beams);
        *os << j.dump() << '\n';
    }
    return 0;
}

// ---- evaluate ------------------------------------------------------------------------

struct TextRecord {
    std::optional<std::string> id;
    std::string text;
};

// JSONL lines with an "ending" field, or plain text lines.
std::vector<TextRecord> read_texts(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<TextRecord> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line.front() != '{') {
            out.push_back({std::nullopt, line});
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), n, e.what());
        }
        if (!j.contains("ending") || !j["ending"].is_string()) throw ParseError(path.string(), n, "missing \"ending\"");
        TextRecord r{std::nullopt, j["ending"].get<std::string>()};
        if (j.contains("id")) r.id = j["id"].get<std::string>();
        out.push_back(std::move(r));
    }
    return out;
}

struct EvaluateArgs {
    std::string hyp, ref, out;
};

int run_evaluate(const EvaluateArgs& a) {
    const auto hyps = read_texts(a.hyp);
    const auto refs = read_texts(a.ref);
    std::vector<Tokens> h, r;
    const bool by_id = std::all_of(hyps.begin(), hyps.end(), [](const TextRecord& t) { return t.id.has_value(); }) &&
                       std::all_of(refs.begin(), refs.end(), [](const TextRecord& t) { return t.id.has_value(); });
    if (by_id) {
        std::map<std::string, std::string> ref_by_id;
        for (const auto& t : refs) ref_by_id[*t.id] = t.text;
        for (const auto& t : hyps) {
            auto it = ref_by_id.find(*t.id);
            if (it == ref_by_id.end()) throw Error("no reference for id '" + *t.id + "'");
            h.push_back(tokenize(t.text));
            r.push_back(tokenize(it->second));
        }
    } else {
        if (hyps.size() != refs.size())
            throw Error(std::to_string(hyps.size()) + " hypotheses for " + std::to_string(refs.size()) + " references");
        for (std::size_t i = 0; i < hyps.size(); ++i) {
            h.push_back(tokenize(hyps[i].text));
            r.push_back(tokenize(refs[i].text));
        }
    }
    const EvalReport report = evaluate(h, r);
    std::cout << report.to_table();
    if (!a.out.empty()) open_out(a.out) << report.to_json() << '\n';
    return 0;
}

// ---- inspect -------------------------------------------------------------------------

struct InspectArgs {
    ConfigFlags cfg;
    std::string stories, id, checkpoint;
    bool json = false;
};

int run_inspect(const InspectArgs& a) {
    TrainConfig c = a.cfg.resolve();
    std::optional<Checkpoint> ckpt;
    if (!a.checkpoint.empty()) {
        ckpt = load_checkpoint(a.checkpoint);
        if (!a.cfg.model_overridden()) c.model = ckpt->model;
    }
    const Vocab vocab;
    const ExampleBuilder builder(load_resources(c), c.model, vocab);
    const Story s = builder.labeled(find_story(load_stories(a.stories), a.id));
    const HeteroGraph g = builder.graph_for(s);
    if (a.json) {
        std::cout << g.to_json() << '\n';
        return 0;
    }
    std::printf("story %s: %zu sentences\n", s.id.c_str(), s.num_sentences());
    for (std::size_t k = 0; k < s.num_sentences(); ++k) std::printf("  s%zu  %s\n", k + 1, s.context_text[k].c_str());
    if (s.ending_text) std::printf("  end %s\n", s.ending_text->c_str());
    if (s.sentiment) std::printf("sentiment label: %s\n", std::string(sentiment_name(*s.sentiment)).c_str());
    std::printf("nodes %zu, edges %zu\n", g.num_nodes(), g.num_edges());
    for (NodeType t : kAllNodeTypes) std::printf("  %-10s %zu\n", std::string(node_type_name(t)).c_str(), g.nodes_of_type(t).size());
    std::map<EdgeType, std::size_t> edge_counts;
    for (const GraphEdge& e : g.edges()) ++edge_counts[e.type];
    for (EdgeType t : kAllEdgeTypes)
        std::printf("  %-22s %zu\n", std::string(edge_type_name(t)).c_str(), edge_counts[t]);
    const auto hits = builder.concepts_for(s);
    std::printf("retrieved concepts %zu\n", hits.size());
    for (const ConceptHit& h : hits) {
        std::string src;
        for (std::size_t k : h.source_sentences) src += (src.empty() ? "" : ",") + std::to_string(k);
        std::printf("  %-16s sentences {%s}%s\n", h.concept_text.c_str(), src.c_str(),
                    g.find("k:" + h.concept_text) ? "" : "  (dropped)");
    }
    if (s.clue_flags) {
        std::printf("clue words:");
        for (std::size_t k = 0; k < s.context.size(); ++k)
            for (std::size_t i = 0; i < s.context[k].size(); ++i)
                if ((*s.clue_flags)[k][i]) std::printf(" %s", s.context[k][i].c_str());
        std::printf("\n");
    }
    if (ckpt) {
        std::size_t values = 0;
        for (const auto& [name, p] : ckpt->params) values += p.second.size();
        std::printf("checkpoint step %zu, config %s, vocab %zu, %zu parameters in %zu tensors\n", ckpt->step,
                    ckpt->config_hash.c_str(), ckpt->vocab.size(), values, ckpt->params.size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Story ending generation with heterogeneous story graphs"};
    app.require_subcommand(1);

    BuildGraphArgs bg;
    CLI::App* build_graph = app.add_subcommand("build-graph", "export story graphs as JSON");
    build_graph->add_option("--stories", bg.stories, "stories (JSONL)")->required()->check(CLI::ExistingFile);
    build_graph->add_option("--id", bg.id, "single story id (pretty JSON)");
    build_graph->add_option("--out", bg.out, "output file (default stdout)");
    bg.cfg.add_paths(build_graph, false);
    bg.cfg.add_model_flags(build_graph);

    LabelArgs lb;
    CLI::App* label = app.add_subcommand("label", "write the auxiliary label cache");
    label->add_option("--stories", lb.stories, "stories (JSONL)")->required()->check(CLI::ExistingFile);
    label->add_option("--out", lb.out, "label cache (JSONL)")->required();
    lb.cfg.add_paths(label, false);
    lb.cfg.add(label, "--lexicon", lb.cfg.v.lexicon_path, &TrainConfig::lexicon_path, "sentiment lexicon (TSV)");
    lb.cfg.add_model_flags(label);

    TrainArgs tr;
    CLI::App* train = app.add_subcommand("train", "train a model");
    tr.cfg.add_paths(train, true);
    tr.cfg.add_model_flags(train);
    tr.cfg.add_train_flags(train);
    tr.cfg.add_beam_flags(train);
    train->add_flag("--quiet", tr.quiet, "no progress output");

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "generate endings with beam search");
    generate->add_option("--checkpoint", gen.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
    generate->add_option("--stories", gen.stories, "stories (JSONL)")->required()->check(CLI::ExistingFile);
    generate->add_option("--out", gen.out, "output JSONL (default stdout)");
    generate->add_flag("--greedy", gen.greedy, "argmax decoding");
    gen.cfg.add_paths(generate, false);
    gen.cfg.add_model_flags(generate);
    gen.cfg.add_beam_flags(generate);

    EvaluateArgs ev;
    CLI::App* eval = app.add_subcommand("evaluate", "BLEU and ROUGE against references");
    eval->add_option("--hyp", ev.hyp, "hypotheses (JSONL with \"ending\" or plain lines)")->required()->check(CLI::ExistingFile);
    eval->add_option("--ref", ev.ref, "references (JSONL with \"ending\" or plain lines)")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", ev.out, "report JSON");

    InspectArgs in;
    CLI::App* inspect = app.add_subcommand("inspect", "show the graph and labels of one story");
    inspect->add_option("--stories", in.stories, "stories (JSONL)")->required()->check(CLI::ExistingFile);
    inspect->add_option("--id", in.id, "story id")->required();
    inspect->add_option("--checkpoint", in.checkpoint, "checkpoint to summarize")->check(CLI::ExistingFile);
    inspect->add_flag("--json", in.json, "print the graph JSON only");
    in.cfg.add_paths(inspect, false);
    in.cfg.add(inspect, "--lexicon", in.cfg.v.lexicon_path, &TrainConfig::lexicon_path, "sentiment lexicon (TSV)");
    in.cfg.add_model_flags(inspect);

    try {
        app.parse(argc, argv);
        if (*build_graph) return run_build_graph(bg);
        if (*label) return run_label(lb);
        if (*train) return run_train(tr);
        if (*generate) return run_generate(gen);
        if (*eval) return run_evaluate(ev);
        if (*inspect) return run_inspect(in);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
