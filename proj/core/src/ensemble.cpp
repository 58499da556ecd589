#include "cc/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

namespace cc::ensemble {

using nlohmann::json;

void Welford::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / n;
  m2 += delta * (x - mean);
}

void Welford::merge(const Welford& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double delta = o.mean - mean;
  const long long total = n + o.n;
  mean += delta * o.n / total;
  m2 += o.m2 + delta * delta * (static_cast<double>(n) * o.n / total);
  n = total;
}

double Welford::stderr_mean() const {
  return n > 1 ? std::sqrt(m2 / (static_cast<double>(n) * (n - 1))) : 0.0;
}

void ChannelTable::add(Key k, Complex v) {
  entries[k].add(v);
  if (retain) samples[k].push_back(v.real());
}

const ComplexWelford& AccumulatorSet::at(const std::string& ch, Key k) const {
  return channels.at(ch).entries.at(k);
}

int worker_count(const EnsembleConfig& config) {
  if (config.workers > 0) return config.workers;
  if (const char* env = std::getenv("CC_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::uint64_t config_hash(const EnsembleConfig& config) {
  std::string repr = config.descriptor + "|seed=" +
                     std::to_string(config.master_seed) +
                     "|samples=" + std::to_string(config.samples);
  for (const auto& c : config.retain_channels) repr += "|retain:" + c;
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : repr) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct PendingResult {
  bool skipped = false;
  SampleResult result;
};

json welford_to_json(const Welford& w) {
  return json{{"n", w.n}, {"mean", w.mean}, {"m2", w.m2}};
}

Welford welford_from_json(const json& j) {
  Welford w;
  w.n = j.at("n").get<long long>();
  w.mean = j.at("mean").get<double>();
  w.m2 = j.at("m2").get<double>();
  return w;
}

json accumulators_to_json(const AccumulatorSet& acc) {
  json channels = json::object();
  for (const auto& [name, table] : acc.channels) {
    json entries = json::array();
    for (const auto& [key, cw] : table.entries)
      entries.push_back(json{{"key", key},
                             {"re", welford_to_json(cw.re)},
                             {"im", welford_to_json(cw.im)}});
    json jt{{"retain", table.retain}, {"entries", entries}};
    if (table.retain) {
      json samples = json::array();
      for (const auto& [key, vec] : table.samples)
        samples.push_back(json{{"key", key}, {"values", vec}});
      jt["samples"] = samples;
    }
    channels[name] = jt;
  }
  return channels;
}

AccumulatorSet accumulators_from_json(const json& j) {
  AccumulatorSet acc;
  for (auto it = j.begin(); it != j.end(); ++it) {
    ChannelTable& table = acc.channels[it.key()];
    table.retain = it.value().at("retain").get<bool>();
    for (const auto& e : it.value().at("entries")) {
      ComplexWelford cw;
      cw.re = welford_from_json(e.at("re"));
      cw.im = welford_from_json(e.at("im"));
      table.entries[e.at("key").get<Key>()] = cw;
    }
    if (table.retain && it.value().contains("samples"))
      for (const auto& s : it.value().at("samples"))
        table.samples[s.at("key").get<Key>()] =
            s.at("values").get<std::vector<double>>();
  }
  return acc;
}

std::uint64_t payload_hash(const std::string& payload) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void save_checkpoint(const std::string& path, const EnsembleConfig& config,
                     const AccumulatorSet& acc, const RunStats& stats) {
  json body{{"config_hash", config_hash(config)},
            {"completed", stats.completed},
            {"skipped", stats.skipped},
            {"skipped_indices", stats.skipped_indices},
            {"accumulators", accumulators_to_json(acc)}};
  const std::string payload = body.dump();
  json envelope{{"format", "cc-critical-checkpoint-v1"},
                {"payload_fnv", payload_hash(payload)},
                {"body", body}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IntegrityError("cannot write checkpoint " + path);
    out << envelope.dump(0);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot open checkpoint " + path);
  json envelope;
  try {
    in >> envelope;
  } catch (const json::exception& e) {
    throw IntegrityError("corrupted checkpoint (parse): " +
                         std::string(e.what()));
  }
  try {
    if (envelope.at("format") != "cc-critical-checkpoint-v1")
      throw IntegrityError("unknown checkpoint format");
    const json& body = envelope.at("body");
    if (payload_hash(body.dump()) !=
        envelope.at("payload_fnv").get<std::uint64_t>())
      throw IntegrityError("corrupted checkpoint (checksum mismatch)");
    Checkpoint cp;
    cp.config_hash = body.at("config_hash").get<std::uint64_t>();
    cp.stats.completed = body.at("completed").get<long long>();
    cp.stats.skipped = body.at("skipped").get<long long>();
    cp.stats.skipped_indices =
        body.at("skipped_indices").get<std::vector<long long>>();
    cp.accumulators = accumulators_from_json(body.at("accumulators"));
    return cp;
  } catch (const json::exception& e) {
    throw IntegrityError("corrupted checkpoint (schema): " +
                         std::string(e.what()));
  }
}

RunResult run_ensemble(const EnsembleConfig& config, const Kernel& kernel) {
  RunResult run;
  for (const auto& name : config.retain_channels)
    run.accumulators.channels[name].retain = true;

  long long start = 0;
  if (!config.checkpoint_path.empty() &&
      std::filesystem::exists(config.checkpoint_path)) {
    Checkpoint cp = load_checkpoint(config.checkpoint_path);
    if (cp.config_hash != config_hash(config))
      throw IntegrityError(
          "checkpoint belongs to a different configuration; refusing to "
          "resume");
    run.accumulators = std::move(cp.accumulators);
    run.stats = std::move(cp.stats);
    start = run.stats.completed + run.stats.skipped;
  }
  if (start >= config.samples) return run;

  const int workers = worker_count(config);
  const long long total = config.samples;
  // Workers may run at most this far ahead of the canonical fold position.
  const long long window = 4 * static_cast<long long>(workers) + 8;

  std::mutex mu;
  std::condition_variable cv_space, cv_ready;
  std::map<long long, PendingResult> pending;
  std::atomic<long long> next_claim{start};
  long long next_fold = start;
  std::exception_ptr failure;

  auto worker = [&]() {
    while (true) {
      const long long idx = next_claim.fetch_add(1);
      if (idx >= total) return;
      {
        std::unique_lock<std::mutex> lk(mu);
        cv_space.wait(lk, [&] {
          return failure || idx < next_fold + window;
        });
        if (failure) return;
      }
      PendingResult pr;
      try {
        pr.result = kernel(static_cast<std::uint64_t>(idx));
      } catch (const SingularityError&) {
        pr.skipped = true;
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!failure) failure = std::current_exception();
        cv_ready.notify_all();
        cv_space.notify_all();
        return;
      }
      {
        std::lock_guard<std::mutex> lk(mu);
        pending.emplace(idx, std::move(pr));
        cv_ready.notify_all();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);

  long long since_checkpoint = 0;
  {
    std::unique_lock<std::mutex> lk(mu);
    while (next_fold < total) {
      cv_ready.wait(lk, [&] {
        return failure || pending.count(next_fold) > 0;
      });
      if (failure) break;
      PendingResult pr = std::move(pending.at(next_fold));
      pending.erase(next_fold);
      if (pr.skipped) {
        ++run.stats.skipped;
        run.stats.skipped_indices.push_back(next_fold);
      } else {
        for (const auto& [ch, key, value] : pr.result.values)
          run.accumulators.add(ch, key, value);
        ++run.stats.completed;
      }
      ++next_fold;
      cv_space.notify_all();

      if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
          ++since_checkpoint >= config.checkpoint_every) {
        since_checkpoint = 0;
        lk.unlock();
        save_checkpoint(config.checkpoint_path, config, run.accumulators,
                        run.stats);
        lk.lock();
      }
    }
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  if (!config.checkpoint_path.empty() && config.checkpoint_every > 0)
    save_checkpoint(config.checkpoint_path, config, run.accumulators,
                    run.stats);
  return run;
}

}  // namespace cc::ensemble
