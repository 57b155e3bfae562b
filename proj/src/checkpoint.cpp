#include "g2s/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "g2s/error.hpp"

namespace g2s {

namespace {

constexpr char kMagic[8] = {'G', '2', 'S', 'T', 'N', 'S', 'R', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, const float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        write_u32(os, bits);
    }
}

void read_f32(std::istream& is, float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = read_u32(is);
        std::memcpy(&data[i], &bits, 4);
    }
}

}  // namespace

void save_checkpoint(const std::string& stem, const ParamStore<float>& params,
                     const CheckpointMeta& meta) {
    std::ofstream bin(stem + ".bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw Error("cannot write checkpoint " + stem + ".bin");
    bin.write(kMagic, 8);
    write_u32(bin, static_cast<std::uint32_t>(params.order.size()));
    for (const auto& name : params.order) {
        const auto& t = params.get(name);
        write_u32(bin, static_cast<std::uint32_t>(name.size()));
        bin.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(bin, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) write_u32(bin, static_cast<std::uint32_t>(d));
        write_f32(bin, t.data.data(), t.size());
    }
    if (!bin) throw Error("short write on checkpoint " + stem + ".bin");
    bin.close();

    nlohmann::ordered_json manifest;
    manifest["tensors"] = nlohmann::ordered_json::array();
    for (const auto& name : params.order) {
        const auto& t = params.get(name);
        manifest["tensors"].push_back({{"name", name}, {"shape", t.shape}});
    }
    manifest["step"] = meta.step;
    manifest["lr"] = meta.lr;
    manifest["seed_state"] = meta.seed_state;
    manifest["task"] = meta.task;
    manifest["vocab_hash_src"] = meta.vocab_hash_src;
    manifest["vocab_hash_tgt"] = meta.vocab_hash_tgt;
    if (!meta.model_config_json.empty())
        manifest["model"] = nlohmann::ordered_json::parse(meta.model_config_json);
    std::ofstream js(stem + ".json", std::ios::trunc);
    if (!js) throw Error("cannot write checkpoint manifest " + stem + ".json");
    js << manifest.dump(2) << "\n";
}

ParamStore<float> load_checkpoint(const std::string& stem, CheckpointMeta* meta_out) {
    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot open checkpoint " + stem + ".bin");
    char magic[8];
    bin.read(magic, 8);
    if (!bin || std::memcmp(magic, kMagic, 8) != 0)
        throw Error("bad checkpoint magic in " + stem + ".bin");
    std::uint32_t count = read_u32(bin);
    ParamStore<float> params;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = read_u32(bin);
        std::string name(name_len, '\0');
        bin.read(name.data(), name_len);
        std::uint32_t ndim = read_u32(bin);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = read_u32(bin);
        Tensor<float> t = Tensor<float>::zeros(shape);
        read_f32(bin, t.data.data(), t.size());
        if (!bin) throw Error("truncated checkpoint " + stem + ".bin");
        params.add(name, std::move(t));
    }

    if (meta_out) {
        std::ifstream js(stem + ".json");
        if (!js) throw Error("cannot open checkpoint manifest " + stem + ".json");
        nlohmann::json manifest = nlohmann::json::parse(js);
        meta_out->step = manifest.value("step", std::int64_t{0});
        meta_out->lr = manifest.value("lr", 0.0);
        meta_out->seed_state = manifest.value("seed_state", std::uint64_t{0});
        meta_out->task = manifest.value("task", std::string{});
        meta_out->vocab_hash_src = manifest.value("vocab_hash_src", std::uint64_t{0});
        meta_out->vocab_hash_tgt = manifest.value("vocab_hash_tgt", std::uint64_t{0});
        if (manifest.contains("model")) meta_out->model_config_json = manifest["model"].dump();
    }
    return params;
}

}  // namespace g2s
