#include "clickcfa/tensor.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "clickcfa/errors.hpp"

namespace clickcfa::nn {

std::uint64_t fnv1a(const void* bytes, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t ParamStore::add(const std::string& name, std::vector<std::size_t> shape,
                            bool trainable) {
    if (index_.count(name)) fail(ErrorKind::Logic, "duplicate parameter name: " + name);
    Entry e;
    e.name = name;
    e.shape = std::move(shape);
    e.offset = data_.size();
    e.len = Tensor::numel(e.shape);
    e.trainable = trainable;
    data_.resize(e.offset + e.len, 0.0);
    entries_.push_back(e);
    index_[name] = entries_.size() - 1;
    return entries_.size() - 1;
}

std::size_t ParamStore::entry_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::Logic, "unknown parameter: " + name);
    return it->second;
}

void ParamStore::init_uniform(const std::string& name, double bound, std::uint64_t seed) {
    Rng rng(derive_seed(seed, fnv1a(name.data(), name.size())));
    for (double& v : values(name)) v = rng.uniform(-bound, bound);
}

std::uint64_t ParamStore::value_hash() const {
    return fnv1a(data_.data(), data_.size() * sizeof(double));
}

void ParamStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write checkpoint: " + path);
    out << "clickcfa-checkpoint v1\n";
    for (const Entry& e : entries_) {
        out << "tensor " << e.name << ' ' << e.shape.size();
        for (auto d : e.shape) out << ' ' << d;
        out << ' ' << (e.trainable ? "trainable" : "frozen") << '\n';
        char buf[17];
        for (std::size_t i = 0; i < e.len; ++i) {
            const auto bits = std::bit_cast<std::uint64_t>(data_[e.offset + i]);
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
            out << buf << ((i + 1) % 8 == 0 || i + 1 == e.len ? '\n' : ' ');
        }
    }
    if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read checkpoint: " + path);
    std::string header;
    std::getline(in, header);
    if (header != "clickcfa-checkpoint v1")
        fail(ErrorKind::Io, "not a clickcfa checkpoint: " + path);
    ParamStore store;
    std::string tok;
    while (in >> tok) {
        if (tok != "tensor") fail(ErrorKind::Io, "checkpoint parse error near '" + tok + "'");
        std::string name, flag;
        std::size_t ndims;
        in >> name >> ndims;
        std::vector<std::size_t> shape(ndims);
        for (auto& d : shape) in >> d;
        in >> flag;
        const std::size_t idx = store.add(name, shape, flag == "trainable");
        auto vals = store.values(idx);
        for (double& v : vals) {
            std::string hex;
            in >> hex;
            if (hex.size() != 16) fail(ErrorKind::Io, "bad value token in checkpoint: " + hex);
            const auto bits = std::stoull(hex, nullptr, 16);
            v = std::bit_cast<double>(static_cast<std::uint64_t>(bits));
        }
        if (!in) fail(ErrorKind::Io, "truncated checkpoint: " + path);
    }
    return store;
}

} // namespace clickcfa::nn
