#include "shgn/checkpoint.hpp"

#include <fstream>

#include "shgn/error.hpp"

namespace shgn {

namespace {

nlohmann::json shape_json(const Shape& s) { return nlohmann::json::array({s.rows, s.cols}); }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ShgnModel& model, std::size_t step,
                     const AdamState* optimizer, const TrainConfig* train) {
    nlohmann::ordered_json j;
    j["format"] = kCheckpointFormat;
    j["config"] = to_json(model.config());
    j["config_hash"] = config_hash(model.config());
    if (train) j["train_config"] = to_json(*train);
    j["step"] = step;
    j["vocab"] = model.vocab().tokens();
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [name, t] : model.params().all()) {
        params[name] = {{"shape", shape_json(t.shape())},
                        {"values", std::vector<double>(t.data().begin(), t.data().end())}};
    }
    j["params"] = std::move(params);
    if (optimizer) {
        j["optimizer"] = {{"t", optimizer->t}, {"m", optimizer->m}, {"v", optimizer->v}};
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write checkpoint " + tmp.string());
        out << j.dump() << '\n';
        if (!out) throw Error("failed writing checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    Checkpoint c;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        if (j.value("format", std::string()) != kCheckpointFormat) {
            throw Error("checkpoint " + path.string() + ": unrecognized format");
        }
        c.model = model_config_from_json(j.at("config"));
        c.config_hash = j.at("config_hash").get<std::string>();
        if (c.config_hash != config_hash(c.model)) {
            throw Error("checkpoint " + path.string() + ": stored config hash does not match its config");
        }
        if (j.contains("train_config")) c.train_config = j["train_config"];
        c.step = j.at("step").get<std::size_t>();
        c.vocab = j.at("vocab").get<std::vector<std::string>>();
        for (const auto& [name, p] : j.at("params").items()) {
            const auto dims = p.at("shape").get<std::vector<std::size_t>>();
            if (dims.size() != 2) throw Error("checkpoint: parameter '" + name + "' has a malformed shape");
            Shape shape{dims[0], dims[1]};
            auto values = p.at("values").get<std::vector<double>>();
            if (values.size() != shape.numel()) {
                throw Error("checkpoint: parameter '" + name + "' holds " + std::to_string(values.size()) +
                            " values for shape " + shape.str());
            }
            c.params.emplace(name, std::make_pair(shape, std::move(values)));
        }
        if (j.contains("optimizer")) {
            AdamState s;
            const auto& o = j["optimizer"];
            s.t = o.at("t").get<std::size_t>();
            s.m = o.at("m").get<std::map<std::string, std::vector<double>>>();
            s.v = o.at("v").get<std::map<std::string, std::vector<double>>>();
            c.optimizer = std::move(s);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("checkpoint " + path.string() + ": " + e.what());
    }
    return c;
}

void restore_params(ShgnModel& model, const Checkpoint& checkpoint) {
    const std::string expected = config_hash(model.config());
    if (checkpoint.config_hash != expected) {
        throw Error("checkpoint config hash " + checkpoint.config_hash + " does not match model config hash " +
                    expected);
    }
    if (checkpoint.vocab != model.vocab().tokens()) throw Error("checkpoint vocabulary differs from the model's");
    const auto& params = model.params().all();
    for (const auto& [name, stored] : checkpoint.params) {
        if (!params.contains(name)) throw Error("checkpoint parameter '" + name + "' is not part of the model");
    }
    for (const auto& [name, t] : params) {
        auto it = checkpoint.params.find(name);
        if (it == checkpoint.params.end()) throw Error("checkpoint is missing parameter '" + name + "'");
        if (!(it->second.first == t.shape())) {
            throw ShapeError("checkpoint parameter '" + name + "' has shape " + it->second.first.str() +
                             ", model expects " + t.shape().str());
        }
        Tensor handle = t;
        std::copy(it->second.second.begin(), it->second.second.end(), handle.mutable_data().begin());
    }
}

std::unique_ptr<ShgnModel> model_from_checkpoint(const Checkpoint& checkpoint,
                                                 std::shared_ptr<const EmbeddingTable> table) {
    auto model = std::make_unique<ShgnModel>(checkpoint.model, Vocab::from_tokens(checkpoint.vocab), std::move(table), 0);
    restore_params(*model, checkpoint);
    return model;
}

}  // namespace shgn
