#include "replaygan/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "replaygan/config_json.hpp"

namespace replaygan {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_tensor_data(std::ostream& os, const Tensor& t) {
    os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor_data(std::istream& is, std::vector<std::int64_t> shape) {
    Tensor t(std::move(shape));
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const train::ModelBundle& bundle, const replay::FeatureBuffer& buffer) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");

    const auto params = bundle.named_params();

    nlohmann::json header;
    header["schema"] = schema_to_json(bundle.schema);
    header["schema_hash"] = bundle.schema.content_hash();
    header["variant"] = train::to_string(bundle.variant);
    header["config"] = train_config_to_json(bundle.config);
    header["has_vae"] = bundle.has_vae;
    {
        nlohmann::json sc = nlohmann::json::array();
        for (const auto& s : bundle.scaling)
            sc.push_back({{"log_transform", s.log_transform}, {"lo", s.lo}, {"hi", s.hi}});
        header["scaling"] = std::move(sc);
    }
    {
        nlohmann::json arrays = nlohmann::json::array();
        for (const auto& [name, var] : params) arrays.push_back({{"name", name}, {"shape", var.value().shape()}});
        header["arrays"] = std::move(arrays);
    }
    {
        nlohmann::json buf;
        buf["capacity"] = buffer.capacity();
        buf["rng_state"] = buffer.rng_state();
        nlohmann::json shapes = nlohmann::json::array();
        for (const auto& e : buffer.entries()) shapes.push_back(e.gamma.shape());
        buf["entry_shapes"] = std::move(shapes);
        header["buffer"] = std::move(buf);
    }
    header["critic_count"] = bundle.critics.size();

    const std::string head = header.dump();
    os.write(kMagic, 4);
    os.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    write_u64(os, head.size());
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, var] : params) write_tensor_data(os, var.value());
    for (const auto& e : buffer.entries()) {
        write_tensor_data(os, e.gamma);
        write_tensor_data(os, e.sigma);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, std::optional<std::uint64_t> expected_schema_hash) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);

    char magic[4];
    is.read(magic, 4);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic in " + path);
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");

    const auto head_len = read_u64(is);
    std::string head(head_len, '\0');
    is.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!is) throw std::runtime_error("checkpoint: truncated header");
    const auto header = nlohmann::json::parse(head);

    VariableSchema schema = schema_from_json(header.at("schema"));
    const auto stored_hash = header.at("schema_hash").get<std::uint64_t>();
    if (schema.content_hash() != stored_hash)
        throw std::runtime_error("checkpoint: schema hash mismatch (corrupt header)");
    if (expected_schema_hash && *expected_schema_hash != stored_hash)
        throw std::runtime_error("checkpoint: schema does not match the expected dataset schema");

    auto config = train_config_from_json(header.at("config"));
    Rng rng(0);  // shapes are overwritten below; initialization values are discarded
    LoadedCheckpoint out;
    out.bundle = train::apply_variant(config, schema, rng);

    const auto critic_count = header.at("critic_count").get<std::size_t>();
    while (out.bundle.critics.size() < critic_count)
        out.bundle.critics.push_back(nets::Critic::init(schema, rng, config.variant == train::Variant::Mbd));

    out.bundle.scaling.clear();
    for (const auto& s : header.at("scaling"))
        out.bundle.scaling.push_back(NumericScaling{s.at("log_transform").get<bool>(), s.at("lo").get<double>(),
                                                    s.at("hi").get<double>()});

    auto params = out.bundle.named_params();
    std::map<std::string, ad::Var> by_name;
    for (auto& [name, var] : params) by_name.emplace(name, var);
    for (const auto& arr : header.at("arrays")) {
        const auto name = arr.at("name").get<std::string>();
        auto shape = arr.at("shape").get<std::vector<std::int64_t>>();
        auto it = by_name.find(name);
        if (it == by_name.end()) throw std::runtime_error("checkpoint: unexpected array " + name);
        Tensor data = read_tensor_data(is, std::move(shape));
        if (!data.same_shape(it->second.value()))
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        it->second.node()->value = std::move(data);
    }

    const auto& buf_meta = header.at("buffer");
    out.buffer = replay::FeatureBuffer(buf_meta.at("capacity").get<std::int64_t>(), 0);
    for (const auto& jshape : buf_meta.at("entry_shapes")) {
        auto shape = jshape.get<std::vector<std::int64_t>>();
        replay::BufferEntry e;
        e.gamma = read_tensor_data(is, shape);
        e.sigma = read_tensor_data(is, shape);
        out.buffer.append(std::move(e));
    }
    out.buffer.restore_rng_state(buf_meta.at("rng_state").get<std::uint64_t>());
    return out;
}

}  // namespace replaygan
