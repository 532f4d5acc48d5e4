#include "eir/graph.hpp"

#include <stdexcept>

namespace eir {

std::string relation_name(Relation r) {
    switch (r) {
        case Relation::suggestive_of: return "suggestive_of";
        case Relation::located_at: return "located_at";
        case Relation::modify: return "modify";
    }
    return "?";
}

Relation relation_from_name(const std::string& s) {
    if (s == "suggestive_of") return Relation::suggestive_of;
    if (s == "located_at") return Relation::located_at;
    if (s == "modify") return Relation::modify;
    throw std::invalid_argument("unknown relation kind: " + s);
}

void KnowledgeGraph::add_edge(int src, int dst, Relation kind) {
    const int n = nodes();
    if (src < 0 || src >= n || dst < 0 || dst >= n)
        throw std::out_of_range("edge endpoint outside graph");
    // edges are undirected; stored canonically so repeated updates are set unions
    relations.insert({std::min(src, dst), std::max(src, dst), static_cast<int>(kind)});
    adjacency[src][dst] = 1;
    adjacency[dst][src] = 1;
}

bool KnowledgeGraph::has_edge(int src, int dst, Relation kind) const {
    return relations.count({std::min(src, dst), std::max(src, dst),
                            static_cast<int>(kind)}) > 0;
}

void KnowledgeGraph::validate() const {
    const int n = nodes();
    if (static_cast<int>(node_names.size()) != n)
        throw std::invalid_argument("graph has " + std::to_string(node_names.size()) +
                                    " names for " + std::to_string(n) + " nodes");
    if (static_cast<int>(adjacency.size()) != n)
        throw std::invalid_argument("adjacency row count mismatch");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(adjacency[i].size()) != n)
            throw std::invalid_argument("adjacency is not square");
        if (!adjacency[i][i]) throw std::invalid_argument("node not self-visible");
        if (!adjacency[0][i] || !adjacency[i][0])
            throw std::invalid_argument("global node must see every node");
        for (int j = 0; j < n; ++j)
            if (adjacency[i][j] != adjacency[j][i])
                throw std::invalid_argument("adjacency is not symmetric");
    }
    for (const auto& [src, dst, kind] : relations) {
        (void)kind;
        if (!adjacency[src][dst])
            throw std::invalid_argument("relation edge not reflected in adjacency");
    }
}

KnowledgeGraph make_graph_skeleton(int organs, int diseases,
                                   const std::vector<std::string>& node_names) {
    KnowledgeGraph g;
    g.organs = organs;
    g.diseases = diseases;
    g.node_names = node_names;
    const int n = g.nodes();
    g.adjacency.assign(n, std::vector<uint8_t>(n, 0));
    for (int i = 0; i < n; ++i) {
        g.adjacency[i][i] = 1;
        g.adjacency[0][i] = 1;
        g.adjacency[i][0] = 1;
    }
    return g;
}

}  // namespace eir
