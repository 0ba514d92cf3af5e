#pragma once

// Independent reference implementations used only by the tests. None of
// them share code with the library: they draw from std::mt19937_64, use
// BFS instead of union-find and plain iteration instead of a factorisation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <random>
#include <vector>

namespace oracle {

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean hit rate; the standard error uses (hits + 1) / (trials + 2) so an
/// event never (or always) observed keeps a nonzero error of about 1/trials.
inline Estimate bernoulli_estimate(std::size_t hits, std::size_t trials) {
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double q = (static_cast<double>(hits) + 1.0) / (n + 2.0);
  return {p, std::sqrt(q * (1.0 - q) / n)};
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// alpha <- lambda + alpha R until the update is below tol.
/// rows[i] = list of (j, r_ij).
inline std::vector<double> fixed_point_alpha(const std::vector<std::vector<std::pair<std::size_t, double>>>& rows,
                                             const std::vector<double>& lambda, double tol = 1e-13,
                                             int max_iter = 1000000) {
  std::vector<double> alpha = lambda;
  std::vector<double> next(alpha.size());
  for (int it = 0; it < max_iter; ++it) {
    next = lambda;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (const auto& [j, r] : rows[i]) next[j] += alpha[i] * r;
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) diff = std::max(diff, std::abs(next[i] - alpha[i]));
    alpha.swap(next);
    if (diff < tol) break;
  }
  return alpha;
}

/// Largest gap test on sorted points in [0, length] including both ends.
inline bool chain_connected(std::vector<double> pts, double length, double range) {
  std::sort(pts.begin(), pts.end());
  double prev = 0.0;
  for (double x : pts) {
    if (x - prev > range) return false;
    prev = x;
  }
  return length - prev <= range;
}

/// Poisson(rho) uniform points on [0, D] with fixed endpoints; connected
/// when no gap exceeds R.
inline Estimate mc_middle_connect(double rho, double range, double length, std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::poisson_distribution<int> count(rho);
  std::uniform_real_distribution<double> pos(0.0, length);
  std::vector<double> pts;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const int n = rho > 0.0 ? count(gen) : 0;
    pts.resize(static_cast<std::size_t>(n));
    for (auto& x : pts) x = pos(gen);
    hits += chain_connected(pts, length, range);
  }
  return bernoulli_estimate(hits, trials);
}

enum class Rule { max_rule, min_rule };

/// Two-range connectivity on [0, 1] with endpoints fixed: each node is short
/// (range x1) with probability p, otherwise long (x2). An inner gap is
/// bridged by the max (or min) of its two neighbours' ranges; a gap to an
/// endpoint by the single adjacent node's range. The node count is either
/// fixed (count >= 0) or Poisson(rho) when count < 0.
inline Estimate mc_two_range(long count, double rho, double x1, double x2, double p, Rule rule, std::size_t trials,
                             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::poisson_distribution<int> poisson(rho > 0.0 ? rho : 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> nodes;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    long n = count;
    if (n < 0) n = rho > 0.0 ? poisson(gen) : 0;
    nodes.resize(static_cast<std::size_t>(n));
    for (auto& nd : nodes) {
      nd.first = u(gen);
      nd.second = u(gen) < p ? x1 : x2;
    }
    std::sort(nodes.begin(), nodes.end());
    bool ok = true;
    if (nodes.empty()) {
      ok = false;  // a bare [0, 1] span with either range below 1
    } else {
      if (nodes.front().first > nodes.front().second) ok = false;
      if (1.0 - nodes.back().first > nodes.back().second) ok = false;
      for (std::size_t i = 0; ok && i + 1 < nodes.size(); ++i) {
        const double gap = nodes[i + 1].first - nodes[i].first;
        const double reach = rule == Rule::max_rule ? std::max(nodes[i].second, nodes[i + 1].second)
                                                    : std::min(nodes[i].second, nodes[i + 1].second);
        if (gap > reach) ok = false;
      }
    }
    hits += ok;
  }
  return bernoulli_estimate(hits, trials);
}

/// Fixed count N, exactly r long-range nodes placed in a uniformly random
/// order, max rule. Matches the conditional quantity Qt(r, N) / C(N, r).
inline Estimate mc_two_range_given_r(long n, long r, double x1, double x2, std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pos(static_cast<std::size_t>(n));
  std::vector<double> ranges(static_cast<std::size_t>(n));
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& x : pos) x = u(gen);
    std::sort(pos.begin(), pos.end());
    for (long i = 0; i < n; ++i) ranges[static_cast<std::size_t>(i)] = i < r ? x2 : x1;
    std::shuffle(ranges.begin(), ranges.end(), gen);
    bool ok = n > 0 && pos.front() <= ranges.front() && 1.0 - pos.back() <= ranges.back();
    for (long i = 0; ok && i + 1 < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (pos[k + 1] - pos[k] > std::max(ranges[k], ranges[k + 1])) ok = false;
    }
    hits += ok;
  }
  return bernoulli_estimate(hits, trials);
}

/// N uniform points on [0, 1] give N + 1 spacings; probability that the
/// first n1 spacings are <= x1 and the remaining n2 are <= x2 (spacings are
/// exchangeable, so any designation gives the same value).
inline Estimate mc_spacings(long n1, long n2, double x1, double x2, std::size_t trials, std::uint64_t seed) {
  const long n = n1 + n2 - 1;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pts(static_cast<std::size_t>(n));
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& x : pts) x = u(gen);
    std::sort(pts.begin(), pts.end());
    bool ok = true;
    double prev = 0.0;
    for (long i = 0; i <= n && ok; ++i) {
      const double next = i < n ? pts[static_cast<std::size_t>(i)] : 1.0;
      const double gap = next - prev;
      if (gap > (i < n1 ? x1 : x2)) ok = false;
      prev = next;
    }
    hits += ok;
  }
  return bernoulli_estimate(hits, trials);
}

/// Cluster statistics of a side x side open-boundary grid by BFS.
/// open[b] flags bond b in the library's bond order (horizontal bonds
/// row-major, then vertical bonds row-major).
struct Clusters {
  std::size_t count = 0;
  std::size_t largest = 0;
  double sum_sq = 0.0;
};

inline Clusters bfs_clusters(std::size_t side, const std::vector<bool>& open) {
  const std::size_t n = side * side;
  std::vector<std::vector<std::size_t>> adj(n);
  std::size_t b = 0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c + 1 < side; ++c, ++b) {
      if (open[b]) {
        adj[r * side + c].push_back(r * side + c + 1);
        adj[r * side + c + 1].push_back(r * side + c);
      }
    }
  }
  for (std::size_t r = 0; r + 1 < side; ++r) {
    for (std::size_t c = 0; c < side; ++c, ++b) {
      if (open[b]) {
        adj[r * side + c].push_back((r + 1) * side + c);
        adj[(r + 1) * side + c].push_back(r * side + c);
      }
    }
  }
  std::vector<bool> seen(n, false);
  Clusters out;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::size_t size = 0;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      ++size;
      for (auto w : adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          q.push(w);
        }
      }
    }
    ++out.count;
    out.largest = std::max(out.largest, size);
    out.sum_sq += static_cast<double>(size) * static_cast<double>(size);
  }
  return out;
}

/// giant fraction, vertices / clusters, all-in-one-cluster indicator.
inline std::array<double, 3> cluster_observables(std::size_t side, const Clusters& c) {
  const double n = static_cast<double>(side * side);
  return {static_cast<double>(c.largest) / n, n / static_cast<double>(c.count), c.count == 1 ? 1.0 : 0.0};
}

/// Exact microcanonical means by walking every bond subset.
inline std::array<std::vector<double>, 3> enumerate_microcanonical(std::size_t side) {
  const std::size_t m = 2 * side * (side - 1);
  std::array<std::vector<double>, 3> sum;
  std::vector<double> count(m + 1, 0.0);
  for (auto& v : sum) v.assign(m + 1, 0.0);
  std::vector<bool> open(m);
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::size_t k = 0;
    for (std::size_t b = 0; b < m; ++b) {
      open[b] = (mask >> b) & 1u;
      k += open[b];
    }
    const auto obs = cluster_observables(side, bfs_clusters(side, open));
    for (std::size_t o = 0; o < 3; ++o) sum[o][k] += obs[o];
    count[k] += 1.0;
  }
  for (auto& v : sum) {
    for (std::size_t k = 0; k <= m; ++k) v[k] /= count[k];
  }
  return sum;
}

/// Direct Bernoulli(p) sampling of the grid through BFS.
inline std::array<Estimate, 3> direct_bond_sampling(std::size_t side, double p, std::size_t trials,
                                                    std::uint64_t seed) {
  const std::size_t m = 2 * side * (side - 1);
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution bond(p);
  std::vector<bool> open(m);
  std::array<double, 3> s{}, ss{};
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t b = 0; b < m; ++b) open[b] = bond(gen);
    const auto obs = cluster_observables(side, bfs_clusters(side, open));
    for (std::size_t o = 0; o < 3; ++o) {
      s[o] += obs[o];
      ss[o] += obs[o] * obs[o];
    }
  }
  std::array<Estimate, 3> out;
  const double n = static_cast<double>(trials);
  for (std::size_t o = 0; o < 3; ++o) {
    const double mean = s[o] / n;
    const double var = std::max(0.0, (ss[o] - n * mean * mean) / (n - 1.0));
    out[o] = {mean, std::sqrt(var / n)};
  }
  return out;
}

}  // namespace oracle
