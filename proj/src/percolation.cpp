#include "vanet/percolation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <thread>

#include "vanet/core_model.hpp"
#include "vanet/csv.hpp"
#include "vanet/lattice.hpp"
#include "vanet/numeric.hpp"

namespace vanet {

// ---------------------------------------------------------------- UnionFind

UnionFind::UnionFind(std::size_t n) : parent_(n, kRoot), size_(n, 1) {
  if (n >= kRoot) throw Error("union-find too large");
  reset();
}

void UnionFind::reset() {
  std::fill(parent_.begin(), parent_.end(), kRoot);
  std::fill(size_.begin(), size_.end(), 1u);
  num_clusters_ = parent_.size();
  max_size_ = parent_.empty() ? 0 : 1;
  sum_sq_ = static_cast<double>(parent_.size());
}

void UnionFind::check(std::size_t x) const {
  if (x >= parent_.size()) throw Error("union-find node " + std::to_string(x) + " out of range");
}

std::size_t UnionFind::find(std::size_t x) {
  check(x);
  std::size_t root = x;
  while (parent_[root] != kRoot) root = parent_[root];
  while (parent_[x] != kRoot) {
    const std::size_t next = parent_[x];
    parent_[x] = static_cast<std::uint32_t>(root);
    x = next;
  }
  return root;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  std::size_t ra = find(a);
  std::size_t rb = find(b);
  if (ra == rb) return false;
  // ra becomes the surviving root.
  if (size_[ra] < size_[rb] || (size_[ra] == size_[rb] && rb < ra)) std::swap(ra, rb);
  const double sa = size_[ra];
  const double sb = size_[rb];
  parent_[rb] = static_cast<std::uint32_t>(ra);
  size_[ra] += size_[rb];
  sum_sq_ += 2.0 * sa * sb;
  --num_clusters_;
  max_size_ = std::max<std::size_t>(max_size_, size_[ra]);
  return true;
}

std::optional<std::size_t> UnionFind::parent(std::size_t x) const {
  check(x);
  if (parent_[x] == kRoot) return std::nullopt;
  return parent_[x];
}

bool UnionFind::audit() const {
  const std::size_t n = parent_.size();
  std::size_t roots = 0;
  std::size_t total = 0;
  std::size_t largest = 0;
  for (std::size_t x = 0; x < n; ++x) {
    std::size_t cur = x;
    std::size_t steps = 0;
    while (parent_[cur] != kRoot) {
      if (parent_[cur] >= n || ++steps > n) return false;
      cur = parent_[cur];
    }
    if (parent_[x] == kRoot) {
      ++roots;
      total += size_[x];
      largest = std::max<std::size_t>(largest, size_[x]);
    }
  }
  return total == n && roots == num_clusters_ && largest == max_size_;
}

// ---------------------------------------------------------------- observables

const char* to_string(Observable obs) {
  switch (obs) {
    case Observable::giant_fraction:
      return "giant_fraction";
    case Observable::avg_cluster_size:
      return "avg_cluster_size";
    case Observable::perfect_connectivity:
      return "perfect_connectivity";
  }
  return "?";
}

ObservableArray observe(const UnionFind& uf, AverageSize avg) {
  const double n = static_cast<double>(uf.size());
  const double largest = static_cast<double>(uf.max_cluster_size());
  ObservableArray out{};
  out[0] = largest / n;
  if (avg == AverageSize::mean_over_clusters) {
    out[1] = n / static_cast<double>(uf.num_clusters());
  } else {
    const double rest = n - largest;
    out[1] = rest > 0.0 ? (uf.sum_squared_sizes() - largest * largest) / rest : 0.0;
  }
  out[2] = uf.num_clusters() == 1 ? 1.0 : 0.0;
  return out;
}

namespace {

void check_side(std::size_t side) {
  if (side < 2) throw Error("lattice side must be at least 2");
}

constexpr std::size_t kReductionBlock = 64;

}  // namespace

SweepRecord microcanonical_sweep(std::size_t side, Rng& rng, AverageSize avg) {
  check_side(side);
  auto bonds = square_lattice_bonds(side);
  shuffle(bonds.data(), bonds.size(), rng);
  UnionFind uf(side * side);
  SweepRecord rec;
  rec.side = side;
  for (auto& v : rec.values) v.resize(bonds.size() + 1);
  auto store = [&](std::size_t m) {
    const auto obs = observe(uf, avg);
    for (std::size_t k = 0; k < 3; ++k) rec.values[k][m] = obs[k];
  };
  store(0);
  for (std::size_t m = 0; m < bonds.size(); ++m) {
    uf.unite(bonds[m].first, bonds[m].second);
    store(m + 1);
  }
  return rec;
}

// ---------------------------------------------------------------- accumulation

SweepAccumulator::SweepAccumulator(std::size_t side) : side_(side) {
  const std::size_t m = square_lattice_bond_count(side) + 1;
  for (std::size_t k = 0; k < 3; ++k) {
    sum_[k].assign(m, 0.0);
    sum_sq_[k].assign(m, 0.0);
  }
}

void SweepAccumulator::add(const SweepRecord& sweep) {
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& v = sweep.values[k];
    if (v.size() != sum_[k].size()) throw Error("sweep size mismatch");
    for (std::size_t m = 0; m < v.size(); ++m) {
      sum_[k][m] += v[m];
      sum_sq_[k][m] += v[m] * v[m];
    }
  }
  ++count_;
}

void SweepAccumulator::merge(const SweepAccumulator& other) {
  if (other.side_ != side_) throw Error("cannot merge accumulators of different lattices");
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t m = 0; m < sum_[k].size(); ++m) {
      sum_[k][m] += other.sum_[k][m];
      sum_sq_[k][m] += other.sum_sq_[k][m];
    }
  }
  count_ += other.count_;
}

MicrocanonicalRecord SweepAccumulator::record() const {
  MicrocanonicalRecord rec;
  rec.side = side_;
  rec.bonds = square_lattice_bond_count(side_);
  rec.iterations = count_;
  const double n = static_cast<double>(count_);
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t size = sum_[k].size();
    rec.mean[k].assign(size, 0.0);
    rec.std_error[k].assign(size, 0.0);
    if (count_ == 0) continue;
    for (std::size_t m = 0; m < size; ++m) {
      const double mean = sum_[k][m] / n;
      rec.mean[k][m] = mean;
      if (count_ > 1) {
        const double var = std::max(0.0, (sum_sq_[k][m] - n * mean * mean) / (n - 1.0));
        rec.std_error[k][m] = std::sqrt(var / n);
      }
    }
  }
  return rec;
}

MicrocanonicalRecord accumulate_sweeps(std::size_t side, std::size_t iterations, std::uint64_t seed,
                                       const SweepOptions& options) {
  check_side(side);
  if (iterations < 1) throw Error("iterations must be at least 1");
  const std::size_t blocks = (iterations + kReductionBlock - 1) / kReductionBlock;
  std::vector<SweepAccumulator> partial(blocks, SweepAccumulator(side));

  auto run_block = [&](std::size_t b) {
    const std::size_t first = b * kReductionBlock;
    const std::size_t last = std::min(iterations, first + kReductionBlock);
    for (std::size_t i = first; i < last; ++i) {
      Rng rng(seed, i);
      partial[b].add(microcanonical_sweep(side, rng, options.avg));
    }
  };

  std::size_t threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = std::min(threads, blocks);
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < blocks; b += threads) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  SweepAccumulator total(side);
  for (const auto& p : partial) total.merge(p);
  return total.record();
}

MicrocanonicalRecord exhaustive_microcanonical(std::size_t side, AverageSize avg) {
  check_side(side);
  const auto bonds = square_lattice_bonds(side);
  const std::size_t m_total = bonds.size();
  if (m_total > kExhaustiveBondLimit) {
    throw Error("exhaustive enumeration is limited to " + std::to_string(kExhaustiveBondLimit) + " bonds");
  }
  const std::size_t vertices = side * side;
  // Integer tallies per m keep the result independent of enumeration order.
  std::vector<std::uint64_t> largest_sum(m_total + 1, 0);
  std::vector<std::vector<std::uint64_t>> cluster_hist(m_total + 1, std::vector<std::uint64_t>(vertices + 1, 0));
  std::vector<double> susceptibility_sum(m_total + 1, 0.0);

  UnionFind uf(vertices);
  const std::uint64_t subsets = std::uint64_t{1} << m_total;
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    uf.reset();
    for (std::size_t b = 0; b < m_total; ++b) {
      if (mask & (std::uint64_t{1} << b)) uf.unite(bonds[b].first, bonds[b].second);
    }
    const auto m = static_cast<std::size_t>(std::popcount(mask));
    largest_sum[m] += uf.max_cluster_size();
    cluster_hist[m][uf.num_clusters()] += 1;
    if (avg == AverageSize::susceptibility) susceptibility_sum[m] += observe(uf, avg)[1];
  }

  MicrocanonicalRecord rec;
  rec.side = side;
  rec.bonds = m_total;
  rec.iterations = static_cast<std::size_t>(subsets);
  rec.exhaustive = true;
  const double n = static_cast<double>(vertices);
  for (std::size_t k = 0; k < 3; ++k) {
    rec.mean[k].assign(m_total + 1, 0.0);
    rec.std_error[k].assign(m_total + 1, 0.0);
  }
  for (std::size_t m = 0; m <= m_total; ++m) {
    const double c = binomial(static_cast<long>(m_total), static_cast<long>(m));
    rec.mean[0][m] = static_cast<double>(largest_sum[m]) / (c * n);
    if (avg == AverageSize::mean_over_clusters) {
      double acc = 0.0;
      for (std::size_t k = 1; k <= vertices; ++k) acc += static_cast<double>(cluster_hist[m][k]) * (n / static_cast<double>(k));
      rec.mean[1][m] = acc / c;
    } else {
      rec.mean[1][m] = susceptibility_sum[m] / c;
    }
    rec.mean[2][m] = static_cast<double>(cluster_hist[m][1]) / c;
  }
  return rec;
}

// ---------------------------------------------------------------- canonical ensemble

std::vector<double> binomial_weights(std::size_t bonds, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("probability must lie in [0, 1]");
  std::vector<double> w(bonds + 1, 0.0);
  if (p == 0.0) {
    w[0] = 1.0;
    return w;
  }
  if (p == 1.0) {
    w[bonds] = 1.0;
    return w;
  }
  const double mtot = static_cast<double>(bonds);
  const auto mode = std::min(bonds, static_cast<std::size_t>(std::floor((mtot + 1.0) * p)));
  const double odds = p / (1.0 - p);
  constexpr double kNegligible = 1e-300;
  w[mode] = 1.0;
  for (std::size_t m = mode; m < bonds; ++m) {
    const double next = w[m] * (mtot - static_cast<double>(m)) / static_cast<double>(m + 1) * odds;
    if (next < kNegligible) break;
    w[m + 1] = next;
  }
  for (std::size_t m = mode; m > 0; --m) {
    const double prev = w[m] * static_cast<double>(m) / (mtot - static_cast<double>(m) + 1.0) / odds;
    if (prev < kNegligible) break;
    w[m - 1] = prev;
  }
  CompensatedSum total;
  for (double x : w) total += x;
  const double norm = total.value();
  for (double& x : w) x /= norm;
  return w;
}

ObservableEstimate canonical_at(const MicrocanonicalRecord& record, double p) {
  const auto w = binomial_weights(record.bonds, p);
  ObservableEstimate out;
  out.iterations = record.iterations;
  for (std::size_t k = 0; k < 3; ++k) {
    if (record.mean[k].size() != w.size()) throw Error("microcanonical record is incomplete");
    CompensatedSum q;
    CompensatedSum e;
    for (std::size_t m = 0; m < w.size(); ++m) {
      if (w[m] == 0.0) continue;
      q += w[m] * record.mean[k][m];
      e += w[m] * record.std_error[k][m];
    }
    out.mean[k] = q.value();
    out.std_error[k] = e.value();
  }
  return out;
}

PercolationCurve canonical_convolve(const MicrocanonicalRecord& record, std::span<const double> p_grid) {
  PercolationCurve curve;
  curve.side = record.side;
  curve.bonds = record.bonds;
  curve.p.assign(p_grid.begin(), p_grid.end());
  for (std::size_t k = 0; k < 3; ++k) {
    curve.mean[k].reserve(p_grid.size());
    curve.std_error[k].reserve(p_grid.size());
  }
  for (double p : p_grid) {
    const auto est = canonical_at(record, p);
    for (std::size_t k = 0; k < 3; ++k) {
      curve.mean[k].push_back(est.mean[k]);
      curve.std_error[k].push_back(est.std_error[k]);
    }
  }
  return curve;
}

ObservableEstimate inhomogeneous_sample(std::size_t side, std::span<const double> edge_probs, std::size_t iterations,
                                        std::uint64_t seed, AverageSize avg) {
  check_side(side);
  const auto bonds = square_lattice_bonds(side);
  if (edge_probs.size() != bonds.size()) throw Error("expected one probability per street");
  for (double q : edge_probs) {
    if (!(q >= 0.0 && q <= 1.0)) throw Error("edge probabilities must lie in [0, 1]");
  }
  if (iterations < 1) throw Error("iterations must be at least 1");
  UnionFind uf(side * side);
  ObservableArray sum{};
  ObservableArray sum_sq{};
  for (std::size_t i = 0; i < iterations; ++i) {
    Rng rng(seed, i);
    uf.reset();
    for (std::size_t b = 0; b < bonds.size(); ++b) {
      if (rng.uniform() < edge_probs[b]) uf.unite(bonds[b].first, bonds[b].second);
    }
    const auto obs = observe(uf, avg);
    for (std::size_t k = 0; k < 3; ++k) {
      sum[k] += obs[k];
      sum_sq[k] += obs[k] * obs[k];
    }
  }
  ObservableEstimate out;
  out.iterations = iterations;
  const double n = static_cast<double>(iterations);
  for (std::size_t k = 0; k < 3; ++k) {
    out.mean[k] = sum[k] / n;
    if (iterations > 1) {
      const double var = std::max(0.0, (sum_sq[k] - n * out.mean[k] * out.mean[k]) / (n - 1.0));
      out.std_error[k] = std::sqrt(var / n);
    }
  }
  return out;
}

BoundEstimates homogeneous_bounds(const MicrocanonicalRecord& record, std::span<const double> edge_probs) {
  if (edge_probs.empty()) throw Error("no edge probabilities");
  const auto [lo, hi] = std::minmax_element(edge_probs.begin(), edge_probs.end());
  BoundEstimates out;
  out.p_min = *lo;
  out.p_max = *hi;
  out.lower = canonical_at(record, *lo);
  out.upper = canonical_at(record, *hi);
  return out;
}

// ---------------------------------------------------------------- threshold

double crossing(const PercolationCurve& curve, Observable obs, double level) {
  const auto& v = curve.mean_of(obs);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (v[i] < level && v[i + 1] >= level) {
      const double t = (level - v[i]) / (v[i + 1] - v[i]);
      return curve.p[i] + t * (curve.p[i + 1] - curve.p[i]);
    }
  }
  throw Error(std::string("no upward crossing of ") + format_double(level) + " for " + to_string(obs) + " in the grid");
}

double estimate_threshold(const PercolationCurve& curve) { return crossing(curve, Observable::giant_fraction, 0.5); }

double transition_width(const PercolationCurve& curve, Observable obs) {
  return crossing(curve, obs, 0.9) - crossing(curve, obs, 0.1);
}

// ---------------------------------------------------------------- export

void write_microcanonical_csv(std::ostream& out, const MicrocanonicalRecord& record) {
  CsvWriter csv(out);
  csv.header({"m", "observable", "mean", "stderr"});
  for (std::size_t m = 0; m <= record.bonds; ++m) {
    for (auto o : kObservables) {
      csv.cell(m).cell(to_string(o)).cell(record.mean_of(o)[m]).cell(record.error_of(o)[m]);
      csv.end_row();
    }
  }
}

void write_canonical_csv(std::ostream& out, const PercolationCurve& curve) {
  CsvWriter csv(out);
  csv.header({"p", "observable", "mean", "stderr"});
  for (std::size_t i = 0; i < curve.p.size(); ++i) {
    for (auto o : kObservables) {
      csv.cell(curve.p[i]).cell(to_string(o)).cell(curve.mean_of(o)[i]).cell(curve.error_of(o)[i]);
      csv.end_row();
    }
  }
}

}  // namespace vanet
