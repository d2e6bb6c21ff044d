#include "promptrec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "promptrec/error.hpp"
#include "promptrec/io.hpp"

namespace promptrec {

namespace {

constexpr const char* kMagic = "PROMPTREC-CKPT-1";

void append_le_double(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

double read_le_double(const std::string& payload, std::size_t offset) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) | static_cast<unsigned char>(payload[offset + static_cast<std::size_t>(i)]);
    }
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

void check_meta_value(const std::string& value) {
    if (value.find('\t') != std::string::npos || value.find('\n') != std::string::npos) {
        throw ValueError("checkpoint: meta values may not contain tabs or newlines");
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, std::uint64_t seed,
                     const std::map<std::string, std::string>& config_echo) {
    const ModelConfig& cfg = model.config();
    std::ostringstream header;
    header << kMagic << '\n';
    header << "meta\tencoder\t" << cfg.encoder << '\n';
    header << "meta\tvocab\t" << cfg.vocab << '\n';
    header << "meta\tdim\t" << cfg.dim << '\n';
    header << "meta\tblock\t" << block_variant_name(cfg.block) << '\n';
    header << "meta\tlayer_norm\t" << (cfg.layer_norm ? 1 : 0) << '\n';
    header << "meta\tdropout\t" << format_g17(cfg.dropout) << '\n';
    header << "meta\tseed\t" << seed << '\n';
    for (const auto& [key, value] : config_echo) {
        check_meta_value(value);
        header << "echo\t" << key << '\t' << value << '\n';
    }

    std::string payload;
    std::size_t offset = 0;
    for (const auto& [name, tensor] : model.params()) {
        std::vector<std::string> dims;
        for (std::size_t d : tensor.shape()) dims.push_back(std::to_string(d));
        header << "tensor\t" << name << '\t' << join(dims, ',') << '\t' << offset << '\n';
        for (double v : tensor.values()) append_le_double(payload, v);
        offset += tensor.size() * 8;
    }
    header << "end\n";
    write_text_file(path, header.str() + payload);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const std::string blob = read_text_file(path);

    std::size_t pos = 0;
    auto next_line = [&]() {
        const std::size_t nl = blob.find('\n', pos);
        if (nl == std::string::npos) throw IoError("checkpoint '" + path + "': truncated header");
        std::string line = blob.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };

    if (next_line() != kMagic) {
        throw IoError("checkpoint '" + path + "': bad magic");
    }

    std::map<std::string, std::string> meta;
    std::map<std::string, std::string> echo;
    struct TensorRec {
        std::string name;
        Shape shape;
        std::size_t offset;
    };
    std::vector<TensorRec> tensors;

    for (;;) {
        const std::string line = next_line();
        if (line == "end") break;
        const std::vector<std::string> f = split(line, '\t');
        if (f.size() == 3 && f[0] == "meta") {
            meta[f[1]] = f[2];
        } else if (f.size() == 3 && f[0] == "echo") {
            echo[f[1]] = f[2];
        } else if (f.size() == 4 && f[0] == "tensor") {
            TensorRec rec;
            rec.name = f[1];
            for (const std::string& tok : split(f[2], ',')) {
                rec.shape.push_back(static_cast<std::size_t>(parse_int(tok, "tensor shape")));
            }
            rec.offset = static_cast<std::size_t>(parse_int(f[3], "tensor offset"));
            tensors.push_back(std::move(rec));
        } else {
            throw IoError("checkpoint '" + path + "': malformed header line '" + line + "'");
        }
    }
    const std::string payload = blob.substr(pos);

    auto require_meta = [&](const char* key) {
        auto it = meta.find(key);
        if (it == meta.end()) {
            throw IoError("checkpoint '" + path + "': missing meta '" + key + "'");
        }
        return it->second;
    };

    ModelConfig cfg;
    cfg.encoder = require_meta("encoder");
    cfg.vocab = static_cast<std::size_t>(parse_int(require_meta("vocab"), "vocab"));
    cfg.dim = static_cast<std::size_t>(parse_int(require_meta("dim"), "dim"));
    cfg.block = block_variant_from_name(require_meta("block"));
    cfg.layer_norm = require_meta("layer_norm") == "1";
    cfg.dropout = parse_double(require_meta("dropout"), "dropout");

    Rng scratch(0);
    LoadedCheckpoint out{Model(cfg, scratch),
                         static_cast<std::uint64_t>(parse_int(require_meta("seed"), "seed")),
                         std::move(echo)};

    std::size_t filled = 0;
    for (const TensorRec& rec : tensors) {
        Tensor& t = out.model.find_param(rec.name);
        if (t.shape() != rec.shape) {
            throw IoError("checkpoint '" + path + "': tensor '" + rec.name + "' has shape " +
                          shape_str(rec.shape) + ", model expects " + shape_str(t.shape()));
        }
        if (rec.offset + t.size() * 8 > payload.size()) {
            throw IoError("checkpoint '" + path + "': payload truncated for '" + rec.name + "'");
        }
        auto vals = t.values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            vals[i] = read_le_double(payload, rec.offset + i * 8);
        }
        ++filled;
    }
    if (filled != out.model.params().size()) {
        throw IoError("checkpoint '" + path + "': expected " +
                      std::to_string(out.model.params().size()) + " tensors, found " +
                      std::to_string(filled));
    }
    return out;
}

}  // namespace promptrec
