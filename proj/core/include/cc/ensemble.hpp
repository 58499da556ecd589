#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cc/types.hpp"

namespace cc::ensemble {

/// Streaming mean/variance (Welford), mergeable.
struct Welford {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const Welford& o);
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double stderr_mean() const;
};

struct ComplexWelford {
  Welford re, im;
  void add(Complex v) {
    re.add(v.real());
    im.add(v.imag());
  }
  void merge(const ComplexWelford& o) {
    re.merge(o.re);
    im.merge(o.im);
  }
  Complex mean() const { return {re.mean, im.mean}; }
  long long count() const { return re.n; }
};

using Key = std::int64_t;
inline Key pack_key(int a, int b) {
  return (static_cast<Key>(a) << 32) |
         static_cast<Key>(static_cast<std::uint32_t>(b));
}
inline std::pair<int, int> unpack_key(Key k) {
  return {static_cast<int>(k >> 32), static_cast<int>(static_cast<std::int32_t>(
                                         static_cast<std::uint32_t>(k)))};
}

struct ChannelTable {
  std::map<Key, ComplexWelford> entries;        // ordered: canonical reduction
  std::map<Key, std::vector<double>> samples;   // only when retained
  bool retain = false;

  void add(Key k, Complex v);
};

struct AccumulatorSet {
  std::map<std::string, ChannelTable> channels;

  ChannelTable& channel(const std::string& name) { return channels[name]; }
  void add(const std::string& ch, Key k, Complex v) { channels[ch].add(k, v); }
  const ComplexWelford& at(const std::string& ch, Key k) const;
};

/// One realization's contribution: (channel, key, value) triples.
struct SampleResult {
  std::vector<std::tuple<std::string, Key, Complex>> values;
};

struct EnsembleConfig {
  std::uint64_t master_seed = 1;
  long long samples = 0;
  int workers = 0;  // 0: CC_WORKERS env var, else hardware concurrency
  std::string descriptor;  // full run description; hashed into checkpoints
  std::set<std::string> retain_channels;
  long long checkpoint_every = 0;  // folds between checkpoints; 0 = off
  std::string checkpoint_path;
};

struct RunStats {
  long long completed = 0;
  long long skipped = 0;
  std::vector<long long> skipped_indices;
};

struct RunResult {
  AccumulatorSet accumulators;
  RunStats stats;
};

using Kernel = std::function<SampleResult(std::uint64_t index)>;

// Deterministic parallel map-reduce over realization indices. Results are
// folded in index order, so the statistics do not depend on the worker count
// or scheduling. A kernel may throw SingularityError to skip a realization.
RunResult run_ensemble(const EnsembleConfig& config, const Kernel& kernel);

std::uint64_t config_hash(const EnsembleConfig& config);

void save_checkpoint(const std::string& path, const EnsembleConfig& config,
                     const AccumulatorSet& acc, const RunStats& stats);

struct Checkpoint {
  std::uint64_t config_hash = 0;
  AccumulatorSet accumulators;
  RunStats stats;
};

/// Throws IntegrityError on corruption or parse failure.
Checkpoint load_checkpoint(const std::string& path);

int worker_count(const EnsembleConfig& config);

}  // namespace cc::ensemble
