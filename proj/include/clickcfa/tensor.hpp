#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clickcfa/rng.hpp"

namespace clickcfa::nn {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, double fill = 0.0) : shape(std::move(s)) {
        data.assign(numel(shape), fill);
    }

    static std::size_t numel(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

// Named, flat-packed parameter collection. All tensors live in one contiguous
// buffer so gradients can be handled as single flat vectors.
class ParamStore {
public:
    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;
        std::size_t offset = 0;
        std::size_t len = 0;
        bool trainable = true;
    };

    std::size_t add(const std::string& name, std::vector<std::size_t> shape,
                    bool trainable = true);

    bool has(const std::string& name) const { return index_.count(name) != 0; }
    std::size_t entry_index(const std::string& name) const;
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    const Entry& entry(const std::string& name) const { return entries_[entry_index(name)]; }
    std::size_t entry_count() const { return entries_.size(); }
    std::size_t flat_size() const { return data_.size(); }

    std::span<double> values(std::size_t i) {
        return {data_.data() + entries_[i].offset, entries_[i].len};
    }
    std::span<const double> values(std::size_t i) const {
        return {data_.data() + entries_[i].offset, entries_[i].len};
    }
    std::span<double> values(const std::string& name) { return values(entry_index(name)); }
    std::span<const double> values(const std::string& name) const {
        return values(entry_index(name));
    }
    std::vector<double>& flat() { return data_; }
    const std::vector<double>& flat() const { return data_; }

    // uniform(-bound, bound) for every weight entry whose name is listed;
    // each tensor gets its own stream derived from (seed, name) so replacing
    // one tensor's values never perturbs another's initialization.
    void init_uniform(const std::string& name, double bound, std::uint64_t seed);

    bool has_nan() const {
        for (double v : data_)
            if (!std::isfinite(v)) return true;
        return false;
    }

    // FNV-1a over the raw value bytes; used for snapshot/no-mutation checks.
    std::uint64_t value_hash() const;

    void save(const std::string& path) const;        // bit-exact text format
    static ParamStore load(const std::string& path); // inverse of save

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> data_;
};

std::uint64_t fnv1a(const void* bytes, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL);

} // namespace clickcfa::nn
