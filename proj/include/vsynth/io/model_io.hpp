#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "vsynth/io/checkpoint.hpp"
#include "vsynth/io/config.hpp"
#include "vsynth/nn/vsignnet.hpp"

namespace vsynth::io {

// A checkpoint holds every trainable parameter, the normalization running
// statistics, optionally the optimizer velocity (as "opt.<param>.momentum"),
// and a JSON echo {"model": <architecture>, "trained_steps": N} so a file is
// self-describing and training can resume where it stopped.

inline Checkpoint model_to_checkpoint(nn::VSignNet& model, int trained_steps,
                                      nn::Sgd* optimizer = nullptr) {
    Checkpoint ck;
    ck.version = 1;
    nlohmann::json j;
    j["model"] = model_config_to_json(model.config());
    j["trained_steps"] = trained_steps;
    ck.config_text = j.dump(2);

    auto add = [&ck](const std::string& name, const nn::Tensor& t) {
        NamedTensor nt;
        nt.name = name;
        nt.dims.assign(t.dims.begin(), t.dims.end());
        nt.data.resize(t.data.size());
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            nt.data[i] = static_cast<float>(t.data[i]);
        }
        ck.tensors.push_back(std::move(nt));
    };
    for (nn::ParamRef& p : model.params()) {
        add(p.name, *p.value);
    }
    for (nn::ParamRef& b : model.buffers()) {
        add(b.name, *b.value);
    }
    if (optimizer != nullptr) {
        std::vector<nn::ParamRef> params = model.params();
        std::vector<nn::Tensor>& vel = optimizer->velocity();
        for (std::size_t i = 0; i < params.size(); ++i) {
            add("opt." + params[i].name + ".momentum", vel[i]);
        }
    }
    return ck;
}

inline void save_model(const std::string& path, nn::VSignNet& model, int trained_steps,
                       nn::Sgd* optimizer = nullptr) {
    write_checkpoint(path, model_to_checkpoint(model, trained_steps, optimizer));
}

struct LoadedModel {
    nn::ModelConfig config;
    nn::VSignNet model;
    int trained_steps = 0;
    bool has_velocity = false;
    std::vector<nn::Tensor> velocity;  // aligned with model.params() order

    explicit LoadedModel(const nn::ModelConfig& c) : config(c), model(c) {}
};

inline LoadedModel load_model(const std::string& path) {
    const Checkpoint ck = read_checkpoint(path);

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ck.config_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path + ": checkpoint config is not valid JSON: " + e.what());
    }
    detail::StrictView v(j, "checkpoint");
    const nlohmann::json* mj = v.object("model");
    if (mj == nullptr) {
        throw ConfigError("checkpoint.model: missing");
    }
    const nn::ModelConfig mc = model_config_from_json(*mj, "checkpoint.model");
    const int trained = v.integer("trained_steps", 0);
    v.done();
    if (trained < 0) {
        throw ConfigError("checkpoint.trained_steps: must be non-negative");
    }

    std::map<std::string, const NamedTensor*> by_name;
    for (const NamedTensor& nt : ck.tensors) {
        if (!by_name.emplace(nt.name, &nt).second) {
            throw IoError(path + ": duplicate tensor '" + nt.name + "'");
        }
    }
    std::set<std::string> consumed;
    auto fill = [&](const std::string& name, nn::Tensor& dst) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw IoError(path + ": checkpoint is missing tensor '" + name + "'");
        }
        const NamedTensor& nt = *it->second;
        bool dims_ok = nt.dims.size() == dst.dims.size();
        for (std::size_t d = 0; dims_ok && d < nt.dims.size(); ++d) {
            dims_ok = nt.dims[d] == static_cast<std::uint32_t>(dst.dims[d]);
        }
        if (!dims_ok) {
            throw IoError(path + ": tensor '" + name + "' has mismatched dimensions");
        }
        for (std::size_t i = 0; i < nt.data.size(); ++i) {
            dst.data[i] = static_cast<double>(nt.data[i]);
        }
        consumed.insert(name);
    };

    LoadedModel lm(mc);
    lm.trained_steps = trained;
    for (nn::ParamRef& p : lm.model.params()) {
        fill(p.name, *p.value);
    }
    for (nn::ParamRef& b : lm.model.buffers()) {
        fill(b.name, *b.value);
    }

    bool any_velocity = false;
    for (const NamedTensor& nt : ck.tensors) {
        if (nt.name.rfind("opt.", 0) == 0) {
            any_velocity = true;
            break;
        }
    }
    if (any_velocity) {
        std::vector<nn::ParamRef> params = lm.model.params();
        lm.velocity.reserve(params.size());
        for (nn::ParamRef& p : params) {
            lm.velocity.emplace_back(p.value->dims);
            fill("opt." + p.name + ".momentum", lm.velocity.back());
        }
        lm.has_velocity = true;
    }

    for (const NamedTensor& nt : ck.tensors) {
        if (consumed.find(nt.name) == consumed.end()) {
            throw IoError(path + ": unexpected tensor '" + nt.name + "'");
        }
    }
    return lm;
}

}  // namespace vsynth::io
