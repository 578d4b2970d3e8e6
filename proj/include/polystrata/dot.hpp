#pragma once

// Graphviz emitters. Every function returns the full DOT source as a string;
// output order follows the input containers, so identical inputs give
// byte-identical files.

#include <cstddef>
#include <string>
#include <vector>

#include "pi1.hpp"
#include "poset.hpp"

namespace polystrata {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    return out;
}

// Hasse diagram, smaller elements at the bottom.
inline std::string poset_dot(const std::string& name, const Poset& p,
                             const std::vector<std::string>& labels) {
    std::string out = "digraph \"" + dot_escape(name) + "\" {\n  rankdir=BT;\n"
                      "  node [shape=box];\n";
    for (size_t i = 0; i < p.size(); ++i) {
        std::string label = i < labels.size() ? labels[i] : std::to_string(i);
        out += "  n" + std::to_string(i) + " [label=\"" + dot_escape(label) + "\"];\n";
    }
    for (auto [lo, hi] : p.covers())
        out += "  n" + std::to_string(lo) + " -> n" + std::to_string(hi) + ";\n";
    out += "}\n";
    return out;
}

inline std::string skeleton_dot(const std::string& name, const TwoSkeleton& sk) {
    std::string out = "digraph \"" + dot_escape(name) + "\" {\n"
                      "  node [shape=circle];\n";
    for (size_t v = 0; v < sk.vertex_count; ++v)
        out += "  v" + std::to_string(v) + ";\n";
    for (size_t e = 0; e < sk.edges.size(); ++e)
        out += "  v" + std::to_string(sk.edges[e].tail) + " -> v" +
               std::to_string(sk.edges[e].head) + " [label=\"e" + std::to_string(e) +
               "\"];\n";
    if (!sk.triangles.empty())
        out += "  label=\"" + std::to_string(sk.triangles.size()) + " triangles\";\n";
    out += "}\n";
    return out;
}

// Two Hasse diagrams side by side with dashed arrows for the order map.
inline std::string paired_poset_dot(const std::string& name, const Poset& left,
                                    const std::vector<std::string>& left_labels,
                                    const Poset& right,
                                    const std::vector<std::string>& right_labels,
                                    const std::vector<size_t>& map) {
    std::string out = "digraph \"" + dot_escape(name) + "\" {\n  rankdir=BT;\n"
                      "  node [shape=box];\n";
    auto cluster = [&](const std::string& tag, const Poset& p,
                       const std::vector<std::string>& labels) {
        out += "  subgraph cluster_" + tag + " {\n    label=\"" + tag + "\";\n";
        for (size_t i = 0; i < p.size(); ++i) {
            std::string label = i < labels.size() ? labels[i] : std::to_string(i);
            out += "    " + tag + std::to_string(i) + " [label=\"" + dot_escape(label) +
                   "\"];\n";
        }
        for (auto [lo, hi] : p.covers())
            out += "    " + tag + std::to_string(lo) + " -> " + tag + std::to_string(hi) +
                   ";\n";
        out += "  }\n";
    };
    cluster("special", left, left_labels);
    cluster("generic", right, right_labels);
    for (size_t i = 0; i < map.size(); ++i)
        out += "  special" + std::to_string(i) + " -> generic" + std::to_string(map[i]) +
               " [style=dashed, constraint=false];\n";
    out += "}\n";
    return out;
}

// Chain of tower levels, finest at the top, one edge per connection.
inline std::string tower_dot(const std::string& name,
                             const std::vector<std::string>& level_labels,
                             const std::vector<std::string>& connection_labels) {
    std::string out = "digraph \"" + dot_escape(name) + "\" {\n  rankdir=TB;\n"
                      "  node [shape=box];\n";
    for (size_t i = 0; i < level_labels.size(); ++i)
        out += "  l" + std::to_string(i) + " [label=\"" + dot_escape(level_labels[i]) +
               "\"];\n";
    for (size_t i = 0; i + 1 < level_labels.size(); ++i) {
        std::string label = i < connection_labels.size() ? connection_labels[i] : "";
        out += "  l" + std::to_string(i + 1) + " -> l" + std::to_string(i) + " [label=\"" +
               dot_escape(label) + "\"];\n";
    }
    out += "}\n";
    return out;
}

} // namespace polystrata
