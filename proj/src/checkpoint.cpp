#include "ssr/checkpoint.hpp"

#include <fstream>

#include "ssr/error.hpp"

namespace ssr {

nlohmann::json checkpoint_to_json(const Model& model, const FeatureEncoder* encoder) {
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["model"] = model.config();
    j["vocab_sizes"] = model.schema().vocab_sizes;
    nlohmann::json selections = nlohmann::json::array();
    for (const auto& layer : model.layers()) {
        if (const auto& sel = layer.selection())
            selections.push_back({{"d_in", sel->d_in}, {"seed", sel->seed}, {"views", sel->views}});
        else
            selections.push_back(nullptr);
    }
    j["selections"] = selections;
    nlohmann::json params = nlohmann::json::array();
    const ParameterStore& store = model.params();
    for (std::size_t i = 0; i < store.size(); ++i)
        params.push_back({{"name", store[i].name}, {"shape", store[i].value.shape()}, {"values", store[i].value.storage()}});
    j["parameters"] = params;
    j["encoder"] = encoder ? nlohmann::json(*encoder) : nlohmann::json(nullptr);
    return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    Checkpoint ck;
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion)
            throw DataError("unsupported checkpoint format version " + std::to_string(version));
        const ModelConfig config = j.at("model").get<ModelConfig>();
        FeatureSchema schema{j.at("vocab_sizes").get<std::vector<std::size_t>>()};
        std::vector<std::optional<ViewSelection>> selections;
        for (const auto& s : j.at("selections")) {
            if (s.is_null()) {
                selections.emplace_back();
                continue;
            }
            ViewSelection sel;
            sel.d_in = s.at("d_in").get<std::size_t>();
            sel.seed = s.at("seed").get<std::uint64_t>();
            sel.views = s.at("views").get<std::vector<std::vector<std::size_t>>>();
            for (const auto& v : sel.views)
                for (std::size_t idx : v)
                    if (idx >= sel.d_in) throw DataError("stored view index " + std::to_string(idx) + " out of range");
            selections.emplace_back(std::move(sel));
        }
        ck.model = std::make_unique<Model>(config, schema, selections);
        ParameterStore& store = ck.model->params();
        const auto& params = j.at("parameters");
        if (params.size() != store.size())
            throw DataError("checkpoint holds " + std::to_string(params.size()) + " parameters, model has " +
                            std::to_string(store.size()));
        for (const auto& p : params) {
            const std::string name = p.at("name").get<std::string>();
            Parameter* target = store.find(name);
            if (!target) throw DataError("checkpoint parameter '" + name + "' does not exist in the model");
            const Shape shape = p.at("shape").get<Shape>();
            if (shape != target->value.shape())
                throw DataError("checkpoint parameter '" + name + "' has shape " + shape_str(shape) + ", expected " +
                                shape_str(target->value.shape()));
            auto values = p.at("values").get<std::vector<double>>();
            if (values.size() != target->value.numel()) throw DataError("checkpoint parameter '" + name + "' is truncated");
            target->value = Tensor(shape, std::move(values));
        }
        if (!j.at("encoder").is_null()) ck.encoder = j.at("encoder").get<FeatureEncoder>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
    return ck;
}

void save_checkpoint(const Model& model, const FeatureEncoder* encoder, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path.string() + " for writing");
    os << checkpoint_to_json(model, encoder).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace ssr
