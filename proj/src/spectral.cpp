#include "isentrope/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isentrope {

namespace {

// Iterative Tarjan; returns the component id of every vertex.
std::vector<int> strong_components(const std::vector<std::vector<int>>& adj, int& count) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<bool> on_stack(n, false);
  std::vector<std::pair<int, std::size_t>> call;
  int next_index = 0;
  count = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge == 0 && index[v] < 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (edge < adj[v].size()) {
        const int w = adj[v][edge++];
        if (index[w] < 0) {
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const int done = v;
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return comp;
}

}  // namespace

SpectralBounds spectral_radius(const std::vector<std::vector<int>>& adj, double rel_tol,
                               int max_iterations) {
  int ncomp = 0;
  const auto comp = strong_components(adj, ncomp);
  std::vector<std::vector<int>> members(ncomp);
  for (int v = 0; v < static_cast<int>(adj.size()); ++v) members[comp[v]].push_back(v);

  SpectralBounds best;
  std::vector<int> local(adj.size(), -1);
  for (int c = 0; c < ncomp; ++c) {
    const auto& vs = members[c];
    for (int i = 0; i < static_cast<int>(vs.size()); ++i) local[vs[i]] = i;
    // Internal edges only.
    std::vector<std::vector<int>> sub(vs.size());
    bool any_edge = false;
    for (int i = 0; i < static_cast<int>(vs.size()); ++i)
      for (int w : adj[vs[i]])
        if (comp[w] == c) {
          sub[i].push_back(local[w]);
          any_edge = true;
        }
    if (!any_edge) continue;  // trivial component, radius 0
    if (vs.size() == 1) {
      const double r = static_cast<double>(sub[0].size());
      if (r > best.upper) best.upper = r;
      if (r > best.lower) best.lower = r;
      continue;
    }
    const std::size_t m = vs.size();
    std::vector<double> x(m, 1.0), y(m);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iterations; ++it) {
      for (std::size_t i = 0; i < m; ++i) {
        double s = x[i];
        for (int w : sub[i]) s += x[static_cast<std::size_t>(w)];
        y[i] = s;
      }
      double qmin = std::numeric_limits<double>::infinity(), qmax = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double q = y[i] / x[i];
        qmin = std::min(qmin, q);
        qmax = std::max(qmax, q);
        norm = std::max(norm, y[i]);
      }
      lo = std::max(lo, qmin);
      hi = std::min(hi, qmax);
      for (std::size_t i = 0; i < m; ++i) x[i] = std::max(y[i] / norm, 1e-300);
      if (hi - lo <= rel_tol * lo) break;
    }
    best.iterations = std::max(best.iterations, it);
    best.lower = std::max(best.lower, lo - 1.0);
    best.upper = std::max(best.upper, hi - 1.0);
  }
  return best;
}

}  // namespace isentrope
