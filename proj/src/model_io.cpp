#include "djrhr/model_io.hpp"

namespace djrhr {

namespace {

Tensor scalar_entry(float v) { return Tensor(1, 1, 1, 1, v); }

int int_field(const Checkpoint& ckpt, const std::string& name) {
    const Tensor* t = ckpt.find(name);
    if (!t || t->numel() != 1) {
        throw CheckpointFormatError("checkpoint missing integer field '" + name + "'");
    }
    return static_cast<int>(t->vec()[0]);
}

}  // namespace

Checkpoint to_checkpoint(const Network& net, const Adam* opt) {
    Checkpoint ckpt;
    ckpt.entries.emplace_back("spec.kind", scalar_entry(net.kind == ModelKind::srr ? 0.f : 1.f));
    ckpt.entries.emplace_back("spec.depth", scalar_entry(static_cast<float>(net.srr.depth)));
    ckpt.entries.emplace_back("spec.width", scalar_entry(static_cast<float>(net.srr.width)));
    ckpt.entries.emplace_back("spec.blocks", scalar_entry(static_cast<float>(net.djrhr.blocks)));
    ckpt.entries.emplace_back("spec.growth", scalar_entry(static_cast<float>(net.djrhr.growth)));
    ckpt.entries.emplace_back("spec.layers_per_block",
                              scalar_entry(static_cast<float>(net.djrhr.layers_per_block)));
    ckpt.entries.emplace_back("spec.trunk", scalar_entry(static_cast<float>(net.djrhr.trunk)));
    for (const auto& [name, t] : net.params) ckpt.entries.emplace_back(name, t);
    if (opt) {
        for (const auto& [name, t] : opt->first_moments()) {
            ckpt.entries.emplace_back("adam.m." + name, t);
        }
        for (const auto& [name, t] : opt->second_moments()) {
            ckpt.entries.emplace_back("adam.v." + name, t);
        }
        ckpt.entries.emplace_back("adam.t", scalar_entry(static_cast<float>(opt->step_count())));
        ckpt.entries.emplace_back("adam.lr", scalar_entry(static_cast<float>(opt->config().lr)));
    }
    return ckpt;
}

Network network_from_checkpoint(const Checkpoint& ckpt) {
    const int kind = int_field(ckpt, "spec.kind");
    Network net;
    if (kind == 0) {
        SrrSpec spec;
        spec.depth = int_field(ckpt, "spec.depth");
        spec.width = int_field(ckpt, "spec.width");
        net = Network::build_srr(spec, 0);
    } else if (kind == 1) {
        DjrhrSpec spec;
        spec.blocks = int_field(ckpt, "spec.blocks");
        spec.growth = int_field(ckpt, "spec.growth");
        spec.layers_per_block = int_field(ckpt, "spec.layers_per_block");
        spec.trunk = int_field(ckpt, "spec.trunk");
        net = Network::build_djrhr(spec, 0);
    } else {
        throw CheckpointFormatError("unknown model kind " + std::to_string(kind));
    }
    for (auto& [name, t] : net.params) {
        const Tensor* stored = ckpt.find(name);
        if (!stored) {
            throw CheckpointShapeError("checkpoint missing parameter '" + name + "'");
        }
        if (!(stored->dims() == t.dims())) {
            throw CheckpointShapeError("parameter '" + name + "' has shape " +
                                       stored->dims().str() + ", expected " + t.dims().str());
        }
        t = *stored;
    }
    return net;
}

void adam_from_checkpoint(const Checkpoint& ckpt, Adam& opt) {
    opt.first_moments().clear();
    opt.second_moments().clear();
    for (const auto& [name, t] : ckpt.entries) {
        if (name.rfind("adam.m.", 0) == 0) {
            opt.first_moments().emplace_back(name.substr(7), t);
        } else if (name.rfind("adam.v.", 0) == 0) {
            opt.second_moments().emplace_back(name.substr(7), t);
        }
    }
    if (const Tensor* t = ckpt.find("adam.t")) {
        opt.set_step_count(static_cast<std::int64_t>(t->vec()[0]));
    }
    if (const Tensor* lr = ckpt.find("adam.lr")) {
        opt.config().lr = static_cast<double>(lr->vec()[0]);
    }
}

void save_model(const std::string& path, const Network& net, const Adam* opt) {
    save_checkpoint(path, to_checkpoint(net, opt));
}

Network load_model(const std::string& path, Adam* opt) {
    const Checkpoint ckpt = load_checkpoint(path);
    Network net = network_from_checkpoint(ckpt);
    if (opt) adam_from_checkpoint(ckpt, *opt);
    return net;
}

}  // namespace djrhr
