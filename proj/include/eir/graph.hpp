#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace eir {

enum class Relation { suggestive_of, located_at, modify };

std::string relation_name(Relation r);
Relation relation_from_name(const std::string& s);

// Fixed node schema: node 0 is the global [CLS] node, then organ nodes, then
// disease nodes. The visibility matrix A is symmetric, self-visible, and the
// global node sees everything. Typed relation edges are a subset of A.
struct KnowledgeGraph {
    int organs = 0;
    int diseases = 0;
    std::vector<std::string> node_names;              // size 1 + organs + diseases
    std::vector<std::vector<uint8_t>> adjacency;      // N x N visibility
    std::set<std::tuple<int, int, int>> relations;    // (src, dst, relation)

    int nodes() const { return 1 + organs + diseases; }
    int organ_node(int organ_idx) const { return 1 + organ_idx; }
    int disease_node(int disease_idx) const { return 1 + organs + disease_idx; }

    void add_edge(int src, int dst, Relation kind);
    bool has_edge(int src, int dst, Relation kind) const;
    // Throws if any structural invariant is broken.
    void validate() const;
};

// Empty-adjacency skeleton with only the always-on visibility: diagonal plus
// the global node's row and column.
KnowledgeGraph make_graph_skeleton(int organs, int diseases,
                                   const std::vector<std::string>& node_names);

}  // namespace eir
