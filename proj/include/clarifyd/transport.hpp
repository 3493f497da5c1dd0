// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "clarifyd/error.hpp"

namespace clarifyd::transport {

struct TransportPlan {
    double cost = 0.0;
    /// flow[i][j] units moved from supply i to demand j.
    std::vector<std::vector<std::int64_t>> flow;
};

/// Exact balanced transportation problem with integer masses, solved by
/// successive shortest paths with Dijkstra on reduced costs. Dense, meant for
/// a few hundred nodes per side. `cost` is row-major supply x demand and must
/// be non-negative.
inline TransportPlan solve(const std::vector<std::int64_t>& supply, const std::vector<std::int64_t>& demand,
                           const std::vector<double>& cost) {
    const std::size_t n = supply.size();
    const std::size_t m = demand.size();
    if (cost.size() != n * m) throw ContractError("transport: cost matrix has wrong size");
    if (std::any_of(supply.begin(), supply.end(), [](auto x) { return x < 0; }) ||
        std::any_of(demand.begin(), demand.end(), [](auto x) { return x < 0; }))
        throw ContractError("transport: negative mass");
    if (std::accumulate(supply.begin(), supply.end(), std::int64_t{0}) !=
        std::accumulate(demand.begin(), demand.end(), std::int64_t{0}))
        throw ContractError("transport: unbalanced masses");

    TransportPlan plan;
    plan.flow.assign(n, std::vector<std::int64_t>(m, 0));
    std::vector<std::int64_t> left_supply(supply);
    std::vector<std::int64_t> left_demand(demand);

    // Nodes: 0 = source, 1..n = supplies, n+1..n+m = demands, n+m+1 = sink.
    const std::size_t nodes = n + m + 2;
    const std::size_t source = 0;
    const std::size_t sink = n + m + 1;
    auto sup = [](std::size_t i) { return 1 + i; };
    auto dem = [n](std::size_t j) { return 1 + n + j; };
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> potential(nodes, 0.0);
    std::vector<double> dist(nodes);
    std::vector<std::size_t> parent(nodes);
    std::vector<bool> done(nodes);

    while (true) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(done.begin(), done.end(), false);
        dist[source] = 0.0;
        parent[source] = source;

        auto relax = [&](std::size_t u, std::size_t v, double arc_cost) {
            const double reduced = std::max(0.0, arc_cost + potential[u] - potential[v]);
            if (dist[u] + reduced < dist[v]) {
                dist[v] = dist[u] + reduced;
                parent[v] = u;
            }
        };

        for (std::size_t iter = 0; iter < nodes; ++iter) {
            std::size_t u = nodes;
            for (std::size_t v = 0; v < nodes; ++v) {
                if (!done[v] && dist[v] < kInf && (u == nodes || dist[v] < dist[u])) u = v;
            }
            if (u == nodes) break;
            done[u] = true;
            if (u == source) {
                for (std::size_t i = 0; i < n; ++i)
                    if (left_supply[i] > 0) relax(u, sup(i), 0.0);
            } else if (u <= n) {
                const std::size_t i = u - 1;
                for (std::size_t j = 0; j < m; ++j) relax(u, dem(j), cost[i * m + j]);
            } else if (u < sink) {
                const std::size_t j = u - 1 - n;
                for (std::size_t i = 0; i < n; ++i)
                    if (plan.flow[i][j] > 0) relax(u, sup(i), -cost[i * m + j]);
                if (left_demand[j] > 0) relax(u, sink, 0.0);
            }
        }
        if (dist[sink] == kInf) break;

        for (std::size_t v = 0; v < nodes; ++v) potential[v] += (dist[v] < kInf ? dist[v] : dist[sink]);

        // Bottleneck along the path, then push.
        std::int64_t push = std::numeric_limits<std::int64_t>::max();
        for (std::size_t v = sink; v != source; v = parent[v]) {
            const std::size_t u = parent[v];
            if (u == source) {
                push = std::min(push, left_supply[v - 1]);
            } else if (v == sink) {
                push = std::min(push, left_demand[u - 1 - n]);
            } else if (u > n) {
                push = std::min(push, plan.flow[v - 1][u - 1 - n]);
            }
        }
        for (std::size_t v = sink; v != source; v = parent[v]) {
            const std::size_t u = parent[v];
            if (u == source) {
                left_supply[v - 1] -= push;
            } else if (v == sink) {
                left_demand[u - 1 - n] -= push;
            } else if (u <= n) {
                plan.flow[u - 1][v - 1 - n] += push;
            } else {
                plan.flow[v - 1][u - 1 - n] -= push;
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) plan.cost += static_cast<double>(plan.flow[i][j]) * cost[i * m + j];
    }
    return plan;
}

} // namespace clarifyd::transport
