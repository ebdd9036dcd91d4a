#include "longview/thvae/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace longview::thvae {

using nlohmann::json;

namespace {

constexpr char kMagic[6] = {'T', 'H', 'V', 'A', 'E', '1'};

json config_to_json(const ThVaeConfig& c) {
    return json{{"num_latents", c.num_latents},
                {"latent_dim", c.latent_dim},
                {"cells_per_block", c.cells_per_block},
                {"cells_per_group", c.cells_per_group},
                {"decoder_layers", c.decoder_layers},
                {"pooled_length", c.pooled_length},
                {"conv_mul_kernels", c.conv_mul_kernels},
                {"learning_rate", c.learning_rate},
                {"kl_warmup_steps", c.kl_warmup_steps},
                {"max_segment_tokens", c.max_segment_tokens},
                {"conv_kernel", c.conv_kernel},
                {"ffn_multiplier", c.ffn_multiplier},
                {"se_reduction", c.se_reduction},
                {"max_decode_tokens", c.max_decode_tokens}};
}

ThVaeConfig config_from_json(const json& j) {
    ThVaeConfig c;
    c.num_latents = j.at("num_latents").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.cells_per_block = j.at("cells_per_block").get<int>();
    c.cells_per_group = j.at("cells_per_group").get<int>();
    c.decoder_layers = j.at("decoder_layers").get<int>();
    c.pooled_length = j.at("pooled_length").get<int>();
    c.conv_mul_kernels = j.at("conv_mul_kernels").get<std::vector<int>>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.kl_warmup_steps = j.at("kl_warmup_steps").get<int>();
    c.max_segment_tokens = j.at("max_segment_tokens").get<int>();
    c.conv_kernel = j.at("conv_kernel").get<int>();
    c.ffn_multiplier = j.at("ffn_multiplier").get<int>();
    c.se_reduction = j.at("se_reduction").get<int>();
    c.max_decode_tokens = j.at("max_decode_tokens").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const ThVaeModel& model, const std::string& path) {
    json tensors = json::array();
    for (const auto& entry : model.params().entries()) {
        tensors.push_back({{"name", entry.name},
                           {"rows", entry.value.rows},
                           {"cols", entry.value.cols},
                           {"trainable", entry.trainable}});
    }
    json header = {{"config", config_to_json(model.config())},
                   {"vocabulary",
                    {{"tokens", model.vocab().tokens},
                     {"embedding_dim", model.vocab().embedding_dim}}},
                   {"training_step_count", model.training_step_count()},
                   {"tensors", tensors}};
    std::string header_text = header.dump();

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint: " + tmp);
        out.write(kMagic, sizeof(kMagic));
        std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
        unsigned char len_le[4] = {static_cast<unsigned char>(len & 0xff),
                                   static_cast<unsigned char>((len >> 8) & 0xff),
                                   static_cast<unsigned char>((len >> 16) & 0xff),
                                   static_cast<unsigned char>((len >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(len_le), 4);
        out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
        std::vector<float> buf;
        for (const auto& entry : model.params().entries()) {
            buf.resize(entry.value.size());
            for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(entry.value.v[i]);
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(float)));
        }
        if (!out) throw IoError("failed while writing checkpoint: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot rename checkpoint into place: " + path);
    }
}

ThVaeModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ValidationError("not a THVAE1 checkpoint: " + path);
    }
    unsigned char len_le[4];
    in.read(reinterpret_cast<char*>(len_le), 4);
    if (!in) throw ValidationError("truncated checkpoint header: " + path);
    std::uint32_t len = static_cast<std::uint32_t>(len_le[0]) |
                        (static_cast<std::uint32_t>(len_le[1]) << 8) |
                        (static_cast<std::uint32_t>(len_le[2]) << 16) |
                        (static_cast<std::uint32_t>(len_le[3]) << 24);
    std::string header_text(len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(len));
    if (!in) throw ValidationError("truncated checkpoint header: " + path);

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad checkpoint header: ") + e.what());
    }

    ThVaeConfig config = config_from_json(header.at("config"));
    auto tokens = header.at("vocabulary").at("tokens").get<std::vector<std::string>>();
    int embedding_dim = header.at("vocabulary").at("embedding_dim").get<int>();
    Vocabulary vocab = Vocabulary::from_tokens(
        std::vector<std::string>(tokens.begin() + 4, tokens.end()), embedding_dim);

    ThVaeModel model(config, std::move(vocab), /*seed=*/0);
    model.set_training_step_count(header.at("training_step_count").get<std::int64_t>());

    std::vector<float> buf;
    for (const json& spec : header.at("tensors")) {
        std::string name = spec.at("name").get<std::string>();
        int rows = spec.at("rows").get<int>();
        int cols = spec.at("cols").get<int>();
        if (!model.params().contains(name)) {
            throw ValidationError("checkpoint tensor '" + name + "' unknown to this model");
        }
        auto& entry = model.params().at(name);
        if (entry.value.rows != rows || entry.value.cols != cols) {
            throw ValidationError("checkpoint tensor '" + name + "' has shape " +
                                  std::to_string(rows) + "x" + std::to_string(cols) +
                                  ", expected " + std::to_string(entry.value.rows) + "x" +
                                  std::to_string(entry.value.cols));
        }
        buf.resize(static_cast<size_t>(rows) * cols);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw ValidationError("truncated checkpoint tensors: " + path);
        for (size_t i = 0; i < buf.size(); ++i) entry.value.v[i] = static_cast<double>(buf[i]);
    }
    return model;
}

}  // namespace longview::thvae
