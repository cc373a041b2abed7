#pragma once

#include <algorithm>
#include <functional>
#include <queue>
#include <vector>

namespace lyap {

using Adjacency = std::vector<std::vector<int>>;

// Tarjan, iterative. Components come out in reverse topological order of the condensation.
inline std::vector<std::vector<int>> tarjan_scc(const Adjacency& adj) {
    int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), low(n, 0), stack;
    std::vector<char> on_stack(n, 0);
    std::vector<std::vector<int>> comps;
    int counter = 0;
    struct Frame { int v; size_t next; };
    std::vector<Frame> call;

    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            int v = f.v;
            if (f.next < adj[v].size()) {
                int w = adj[v][f.next++];
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                comps.push_back(std::move(comp));
            }
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    return comps;
}

inline std::vector<char> reachable_from(const Adjacency& adj, const std::vector<int>& sources) {
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> todo;
    for (int s : sources)
        if (!seen[s]) { seen[s] = 1; todo.push_back(s); }
    while (!todo.empty()) {
        int v = todo.back();
        todo.pop_back();
        for (int w : adj[v])
            if (!seen[w]) { seen[w] = 1; todo.push_back(w); }
    }
    return seen;
}

inline Adjacency reversed(const Adjacency& adj) {
    Adjacency r(adj.size());
    for (size_t v = 0; v < adj.size(); ++v)
        for (int w : adj[v]) r[w].push_back(static_cast<int>(v));
    return r;
}

inline bool strongly_connected(const Adjacency& adj) {
    if (adj.empty()) return true;
    auto f = reachable_from(adj, {0});
    auto b = reachable_from(reversed(adj), {0});
    for (size_t i = 0; i < adj.size(); ++i)
        if (!f[i] || !b[i]) return false;
    return true;
}

// Kahn's algorithm; false if a cycle is present.
inline bool is_acyclic(const Adjacency& adj) {
    std::vector<int> indeg(adj.size(), 0);
    for (auto& l : adj)
        for (int w : l) ++indeg[w];
    std::queue<int> q;
    for (size_t v = 0; v < adj.size(); ++v)
        if (indeg[v] == 0) q.push(static_cast<int>(v));
    size_t seen = 0;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        ++seen;
        for (int w : adj[v])
            if (--indeg[w] == 0) q.push(w);
    }
    return seen == adj.size();
}

}  // namespace lyap
