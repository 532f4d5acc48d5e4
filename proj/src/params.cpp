#include "eir/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace eir {

Tensor ParamStore::create(const std::string& name, Shape shape, std::mt19937_64& rng,
                          double bound, bool trainable) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = dist(rng);
    return adopt(name, Tensor::from(std::move(shape), std::move(values), trainable));
}

Tensor ParamStore::create_const(const std::string& name, Shape shape, double fill,
                                bool trainable) {
    return adopt(name, Tensor(std::move(shape), fill, trainable));
}

Tensor ParamStore::adopt(const std::string& name, Tensor t) {
    if (index_.count(name))
        throw std::invalid_argument("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    entries_.emplace_back(name, t);
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return entries_[it->second].second;
}

std::vector<Tensor> ParamStore::trainable() const {
    std::vector<Tensor> out;
    for (const auto& [name, t] : entries_)
        if (t.requires_grad()) out.push_back(t);
    return out;
}

size_t ParamStore::scalar_count() const {
    size_t n = 0;
    for (const auto& [name, t] : entries_)
        if (t.requires_grad()) n += t.numel();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

namespace {

constexpr char kMagic[8] = {'E', 'I', 'R', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& os, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<uint64_t>(v)); }

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    put_u64(os, store.entries().size());
    for (const auto& [name, t] : store.entries()) {
        put_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<uint32_t>(t.rank()));
        for (int i = 0; i < t.rank(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
        for (size_t i = 0; i < t.numel(); ++i) put_f64(os, t.data()[i]);
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    const uint64_t count = get_u64(is);
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(count);
    for (uint64_t r = 0; r < count; ++r) {
        const uint32_t name_len = get_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const uint32_t rank = get_u32(is);
        if (rank == 0 || rank > 4)
            throw std::runtime_error("corrupt checkpoint record " + name + ": rank " +
                                     std::to_string(rank));
        Shape shape(rank);
        for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(get_u32(is));
        std::vector<double> values(shape_numel(shape));
        for (double& v : values) v = get_f64(is);
        if (!is) throw std::runtime_error("truncated checkpoint: " + path);
        out.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
    }
    return out;
}

void load_checkpoint(ParamStore& store, const std::string& path) {
    auto records = read_checkpoint(path);
    if (records.size() != store.entries().size())
        throw std::runtime_error("checkpoint has " + std::to_string(records.size()) +
                                 " records, model expects " +
                                 std::to_string(store.entries().size()));
    for (auto& [name, value] : records) {
        if (!store.has(name)) throw std::runtime_error("checkpoint names unknown parameter: " + name);
        Tensor dst = store.get(name);
        if (dst.shape() != value.shape())
            throw std::runtime_error("checkpoint shape mismatch for " + name + ": " +
                                     shape_str(value.shape()) + " vs " + shape_str(dst.shape()));
        std::copy(value.vec().begin(), value.vec().end(), dst.vec().begin());
    }
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace eir
