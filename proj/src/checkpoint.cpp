#include "hdmi/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hdmi {

namespace {

constexpr char kMagic[5] = {'H', 'D', 'M', 'I', '1'};
constexpr std::uint8_t kFormatVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::string shape_string(const Tensor& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
        if (i) os << 'x';
        os << t.shape()[i];
    }
    return os.str();
}

}  // namespace

std::string CheckpointData::config_value(const std::string& key) const {
    for (const auto& [k, v] : config)
        if (k == key) return v;
    throw LookupError("checkpoint config key missing: " + key);
}

void write_checkpoint(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& config,
                      const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open checkpoint for writing: " + path);

    os.write(kMagic, sizeof(kMagic));
    os.put(static_cast<char>(kFormatVersion));

    std::ostringstream cfg;
    for (const auto& [k, v] : config) cfg << k << '=' << v << '\n';
    const std::string cfg_text = cfg.str();
    write_u32(os, static_cast<std::uint32_t>(cfg_text.size()));
    os.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

    write_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_u32(os, static_cast<std::uint32_t>(t->shape().size()));
        for (std::size_t d : t->shape()) write_u64(os, static_cast<std::uint64_t>(d));
        std::vector<float> buf(t->size());
        for (std::size_t i = 0; i < t->size(); ++i) buf[i] = static_cast<float>((*t)[i]);
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!os) throw InputError("checkpoint write failed: " + path);

    std::ofstream manifest(path + ".manifest");
    if (!manifest) throw InputError("cannot open checkpoint manifest for writing");
    manifest << "format=HDMI1 v" << static_cast<int>(kFormatVersion) << "\n";
    for (const auto& [name, t] : tensors) manifest << name << '\t' << shape_string(*t) << '\n';
}

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open checkpoint: " + path);

    char magic[5];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw InputError("bad checkpoint magic in " + path);
    const int version = is.get();
    if (version != kFormatVersion)
        throw InputError("unsupported checkpoint format version in " + path);

    CheckpointData data;
    const std::uint32_t cfg_len = read_u32(is);
    std::string cfg_text(cfg_len, '\0');
    is.read(cfg_text.data(), cfg_len);
    std::istringstream cfg(cfg_text);
    std::string line;
    while (std::getline(cfg, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        data.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }

    // Names come from the manifest; the binary carries shapes and data only.
    std::vector<std::string> names;
    {
        std::ifstream manifest(path + ".manifest");
        if (manifest) {
            std::string mline;
            std::getline(manifest, mline);  // format header
            while (std::getline(manifest, mline)) {
                const auto tab = mline.find('\t');
                if (tab != std::string::npos) names.push_back(mline.substr(0, tab));
            }
        }
    }

    const std::uint32_t n_tensors = read_u32(is);
    for (std::uint32_t ti = 0; ti < n_tensors; ++ti) {
        const std::uint32_t ndim = read_u32(is);
        std::vector<std::size_t> shape(ndim);
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape[d] = static_cast<std::size_t>(read_u64(is));
            count *= shape[d];
        }
        std::vector<float> buf(count);
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (!is) throw InputError("truncated checkpoint: " + path);
        std::vector<double> vals(count);
        for (std::size_t i = 0; i < count; ++i) vals[i] = static_cast<double>(buf[i]);
        std::string name = ti < names.size() ? names[ti] : ("tensor_" + std::to_string(ti));
        data.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(vals)));
    }
    return data;
}

}  // namespace hdmi
