#include "cthunet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cthunet {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'H', 'U', 'N', 'E', 'T', '\0'};
constexpr uint32_t kVersion = 1;

using nlohmann::json;

json config_to_json(const ModelConfig& m) {
    return json{{"in_channels", m.in_channels},
                {"base_channels", m.base_channels},
                {"depth", m.depth},
                {"norm", m.norm == ModelConfig::NormMode::Batch ? "batch" : "none"},
                {"upsample", m.upsample == ModelConfig::Upsample::TransposedConv
                                 ? "transposed-conv"
                                 : "bilinear+conv"}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig m;
    m.in_channels = j.at("in_channels").get<int>();
    m.base_channels = j.at("base_channels").get<int>();
    m.depth = j.at("depth").get<int>();
    m.norm = j.at("norm").get<std::string>() == "batch" ? ModelConfig::NormMode::Batch
                                                        : ModelConfig::NormMode::None;
    m.upsample = j.at("upsample").get<std::string>() == "transposed-conv"
                     ? ModelConfig::Upsample::TransposedConv
                     : ModelConfig::Upsample::BilinearConv;
    return m;
}

json loss_to_json(const LossConfig& l) {
    return json{{"alpha", l.alpha},
                {"beta", l.beta},
                {"dice_smooth", l.dice_smooth},
                {"bce_weighting", l.bce_weighting == BceWeighting::HedClassBalance
                                      ? "hed-class-balance"
                                      : "uniform"}};
}

LossConfig loss_from_json(const json& j) {
    LossConfig l;
    l.alpha = j.at("alpha").get<double>();
    l.beta = j.at("beta").get<double>();
    l.dice_smooth = j.at("dice_smooth").get<double>();
    l.bce_weighting = j.at("bce_weighting").get<std::string>() == "uniform"
                          ? BceWeighting::Uniform
                          : BceWeighting::HedClassBalance;
    return l;
}

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("checkpoint: truncated file");
}

void write_floats(std::ofstream& f, const std::vector<float>& v) {
    write_pod(f, uint64_t(v.size()));
    f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(float)));
}

std::vector<float> read_floats(std::ifstream& f) {
    uint64_t n = 0;
    read_pod(f, n);
    std::vector<float> v(n);
    f.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(float)));
    if (!f) throw std::runtime_error("checkpoint: truncated tensor data");
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, AttentionUNet& model, const CheckpointMeta& meta,
                     const Optimizer* opt) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);

    json j{{"model", config_to_json(meta.model)},
           {"loss", loss_to_json(meta.loss)},
           {"epoch", meta.epoch},
           {"val_dice", meta.val_dice},
           {"optimizer", opt ? opt->name() : meta.optimizer}};
    const std::string meta_str = j.dump();

    f.write(kMagic, 8);
    write_pod(f, kVersion);
    write_pod(f, uint64_t(meta_str.size()));
    f.write(meta_str.data(), std::streamsize(meta_str.size()));

    const auto params = model.params();
    const auto buffers = model.buffers();
    write_pod(f, uint32_t(params.size() + buffers.size()));
    auto write_named = [&f](const std::string& name, const std::vector<float>& v) {
        write_pod(f, uint32_t(name.size()));
        f.write(name.data(), std::streamsize(name.size()));
        write_floats(f, v);
    };
    for (const auto& p : params) write_named(p.name, *p.value);
    for (const auto& b : buffers) write_named(b.name, *b.value);

    const uint8_t has_opt = opt ? 1 : 0;
    write_pod(f, has_opt);
    if (opt) {
        const auto state = opt->state();
        write_pod(f, uint64_t(opt->step_count()));
        write_pod(f, uint32_t(state.size()));
        for (const auto& s : state) write_floats(f, s);
    }
    if (!f) throw std::runtime_error("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    uint32_t version = 0;
    read_pod(f, version);
    if (version != kVersion)
        throw std::runtime_error("checkpoint " + path + " has version " +
                                 std::to_string(version) + ", this build reads version " +
                                 std::to_string(kVersion));

    uint64_t meta_len = 0;
    read_pod(f, meta_len);
    std::string meta_str(meta_len, '\0');
    f.read(meta_str.data(), std::streamsize(meta_len));
    if (!f) throw std::runtime_error("checkpoint: truncated metadata");

    LoadedCheckpoint ck;
    json j = json::parse(meta_str);
    ck.meta.model = config_from_json(j.at("model"));
    ck.meta.loss = loss_from_json(j.at("loss"));
    ck.meta.epoch = j.at("epoch").get<int>();
    ck.meta.val_dice = j.at("val_dice").get<double>();
    ck.meta.optimizer = j.at("optimizer").get<std::string>();

    uint32_t n_tensors = 0;
    read_pod(f, n_tensors);
    for (uint32_t i = 0; i < n_tensors; ++i) {
        uint32_t name_len = 0;
        read_pod(f, name_len);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        if (!f) throw std::runtime_error("checkpoint: truncated tensor name");
        ck.tensors.emplace_back(std::move(name), read_floats(f));
    }

    uint8_t has_opt = 0;
    read_pod(f, has_opt);
    if (has_opt) {
        read_pod(f, ck.opt_step);
        uint32_t n = 0;
        read_pod(f, n);
        for (uint32_t i = 0; i < n; ++i) ck.opt_state.push_back(read_floats(f));
    }
    return ck;
}

void restore_model(const LoadedCheckpoint& ck, AttentionUNet& model) {
    const auto& want = model.config();
    const auto& have = ck.meta.model;
    if (want.in_channels != have.in_channels || want.base_channels != have.base_channels ||
        want.depth != have.depth || want.norm != have.norm || want.upsample != have.upsample)
        throw std::runtime_error(
            "checkpoint model config mismatch: file has base_channels=" +
            std::to_string(have.base_channels) + ", requested base_channels=" +
            std::to_string(want.base_channels));

    auto params = model.params();
    auto buffers = model.buffers();
    size_t idx = 0;
    auto take = [&](const std::string& name, std::vector<float>& dst) {
        if (idx >= ck.tensors.size() || ck.tensors[idx].first != name ||
            ck.tensors[idx].second.size() != dst.size())
            throw std::runtime_error("checkpoint tensor layout mismatch at '" + name + "'");
        dst = ck.tensors[idx].second;
        ++idx;
    };
    for (auto& p : params) take(p.name, *p.value);
    for (auto& b : buffers) take(b.name, *b.value);
    if (idx != ck.tensors.size())
        throw std::runtime_error("checkpoint has extra tensors beyond the model layout");
}

AttentionUNet model_from_checkpoint(const LoadedCheckpoint& ck) {
    AttentionUNet model(ck.meta.model);
    restore_model(ck, model);
    return model;
}

} // namespace cthunet
