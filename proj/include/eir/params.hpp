#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eir/tensor.hpp"

namespace eir {

// Named parameter container. Entries keep insertion order so checkpoints and
// the gradcheck report are stable across runs.
class ParamStore {
public:
    // Uniform init in [-bound, +bound]; trainable parameters require grad.
    Tensor create(const std::string& name, Shape shape, std::mt19937_64& rng, double bound,
                  bool trainable = true);
    Tensor create_const(const std::string& name, Shape shape, double fill, bool trainable = true);
    // Registers an externally built tensor (snapshots, metadata records).
    Tensor adopt(const std::string& name, Tensor t);

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    Tensor get(const std::string& name) const;
    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::vector<Tensor> trainable() const;
    size_t scalar_count() const;

    void zero_grads();

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, size_t> index_;
};

// Checkpoint container: magic "EIRCKPT1", u64 record count, then per record
// u32 name length, name bytes, u32 rank, u32 dims, f64 values. All integers
// and values little-endian. Round-trips byte-exactly.
void save_checkpoint(const ParamStore& store, const std::string& path);
// Loads values into an already constructed store; names and shapes must match
// the file exactly.
void load_checkpoint(ParamStore& store, const std::string& path);
// Raw read, for inspection and byte-level tests.
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);

// FNV-1a, used to fingerprint vocabularies inside checkpoints.
uint64_t fnv1a(const std::string& s);

}  // namespace eir
