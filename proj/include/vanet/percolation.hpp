#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "vanet/random.hpp"

namespace vanet {

/// Disjoint-set forest with full path compression and union by size.
///
/// Equal-size merges attach the root with the larger index under the one
/// with the smaller index, so a given union sequence always produces the
/// same forest.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);

  std::size_t size() const { return parent_.size(); }
  std::size_t find(std::size_t x);
  /// Returns true when a and b were in different clusters.
  bool unite(std::size_t a, std::size_t b);
  void reset();

  std::size_t num_clusters() const { return num_clusters_; }
  std::size_t max_cluster_size() const { return max_size_; }
  std::size_t cluster_size(std::size_t x) { return size_[find(x)]; }
  /// Sum over clusters of size^2.
  double sum_squared_sizes() const { return sum_sq_; }
  /// Parent link, or nullopt for a root. Does not compress.
  std::optional<std::size_t> parent(std::size_t x) const;
  /// Structural check of the whole forest: every chain reaches a root,
  /// root sizes add up to size(), root count equals num_clusters() and the
  /// tracked maximum equals the largest root size.
  bool audit() const;

 private:
  static constexpr std::uint32_t kRoot = 0xFFFFFFFFu;

  void check(std::size_t x) const;

  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::size_t num_clusters_ = 0;
  std::size_t max_size_ = 0;
  double sum_sq_ = 0.0;
};

enum class Observable : std::uint8_t { giant_fraction = 0, avg_cluster_size = 1, perfect_connectivity = 2 };

inline constexpr std::array<Observable, 3> kObservables{Observable::giant_fraction, Observable::avg_cluster_size,
                                                        Observable::perfect_connectivity};

const char* to_string(Observable obs);

/// mean_over_clusters: vertices / clusters.
/// susceptibility: sum s^2 / sum s over every cluster except the largest
/// (0 when the largest cluster holds every vertex).
enum class AverageSize : std::uint8_t { mean_over_clusters, susceptibility };

using ObservableArray = std::array<double, 3>;

ObservableArray observe(const UnionFind& uf, AverageSize avg = AverageSize::mean_over_clusters);

/// Observables after each of the M bond additions of one sweep; index m in
/// [0, M].
struct SweepRecord {
  std::size_t side = 0;
  std::array<std::vector<double>, 3> values;
};

/// One Newman-Ziff sweep: shuffle the M bonds, add them one at a time and
/// record the observables after each addition.
SweepRecord microcanonical_sweep(std::size_t side, Rng& rng, AverageSize avg = AverageSize::mean_over_clusters);

/// Q_m estimates for m in [0, M].
struct MicrocanonicalRecord {
  std::size_t side = 0;
  std::size_t bonds = 0;
  std::size_t iterations = 0;
  bool exhaustive = false;
  std::array<std::vector<double>, 3> mean;
  std::array<std::vector<double>, 3> std_error;

  const std::vector<double>& mean_of(Observable o) const { return mean[static_cast<std::size_t>(o)]; }
  const std::vector<double>& error_of(Observable o) const { return std_error[static_cast<std::size_t>(o)]; }
};

/// Running per-m sums; merging is plain addition so partial results from
/// independent workers combine in any grouping.
class SweepAccumulator {
 public:
  SweepAccumulator(std::size_t side);
  void add(const SweepRecord& sweep);
  void merge(const SweepAccumulator& other);
  std::size_t count() const { return count_; }
  MicrocanonicalRecord record() const;

 private:
  std::size_t side_;
  std::size_t count_ = 0;
  std::array<std::vector<double>, 3> sum_;
  std::array<std::vector<double>, 3> sum_sq_;
};

struct SweepOptions {
  AverageSize avg = AverageSize::mean_over_clusters;
  /// 0 picks hardware_concurrency.
  std::size_t threads = 1;
};

/// Averages `iterations` sweeps. Sweep i draws from Rng(seed, i) and sweeps
/// are reduced in fixed blocks of 64 in index order, so the result is
/// bit-identical for any thread count.
MicrocanonicalRecord accumulate_sweeps(std::size_t side, std::size_t iterations, std::uint64_t seed,
                                       const SweepOptions& options = {});

/// Exact Q_m from every bond subset. Limited to M <= 24 (side <= 4).
MicrocanonicalRecord exhaustive_microcanonical(std::size_t side, AverageSize avg = AverageSize::mean_over_clusters);

inline constexpr std::size_t kExhaustiveBondLimit = 24;

/// Binomial(M, p) pmf over m = 0..M from the mode-anchored recurrence,
/// normalised to sum 1.
std::vector<double> binomial_weights(std::size_t bonds, double p);

struct PercolationCurve {
  std::size_t side = 0;
  std::size_t bonds = 0;
  std::vector<double> p;
  std::array<std::vector<double>, 3> mean;
  std::array<std::vector<double>, 3> std_error;

  const std::vector<double>& mean_of(Observable o) const { return mean[static_cast<std::size_t>(o)]; }
  const std::vector<double>& error_of(Observable o) const { return std_error[static_cast<std::size_t>(o)]; }
};

/// Q(p) = sum_m B(M, m, p) Q_m, with error sum_m B(M, m, p) stderr_m.
PercolationCurve canonical_convolve(const MicrocanonicalRecord& record, std::span<const double> p_grid);

/// Evaluates the three observables at a single p.
struct ObservableEstimate {
  ObservableArray mean{};
  ObservableArray std_error{};
  std::size_t iterations = 0;

  double mean_of(Observable o) const { return mean[static_cast<std::size_t>(o)]; }
  double error_of(Observable o) const { return std_error[static_cast<std::size_t>(o)]; }
};

ObservableEstimate canonical_at(const MicrocanonicalRecord& record, double p);

/// Direct Bernoulli realisations with per-bond open probabilities (bond
/// order as in square_lattice_bonds). Iteration i draws from Rng(seed, i).
ObservableEstimate inhomogeneous_sample(std::size_t side, std::span<const double> edge_probs, std::size_t iterations,
                                        std::uint64_t seed, AverageSize avg = AverageSize::mean_over_clusters);

/// Lower and upper curves obtained by setting every bond to the smallest
/// and largest of `edge_probs`, evaluated through the microcanonical record.
struct BoundEstimates {
  double p_min = 0.0;
  double p_max = 0.0;
  ObservableEstimate lower;
  ObservableEstimate upper;
};

BoundEstimates homogeneous_bounds(const MicrocanonicalRecord& record, std::span<const double> edge_probs);

/// p where the observable first rises through `level` (linear
/// interpolation). Throws Error when the grid has no such crossing.
double crossing(const PercolationCurve& curve, Observable obs, double level);

/// 0.5-crossing of the giant-cluster fraction.
double estimate_threshold(const PercolationCurve& curve);

/// crossing(0.9) - crossing(0.1) of the given observable.
double transition_width(const PercolationCurve& curve, Observable obs = Observable::giant_fraction);

/// Columns: m,observable,mean,stderr.
void write_microcanonical_csv(std::ostream& out, const MicrocanonicalRecord& record);
/// Columns: p,observable,mean,stderr.
void write_canonical_csv(std::ostream& out, const PercolationCurve& curve);

}  // namespace vanet
