#include "rover/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rover {

// ---------------------------------------------------------------------------
// Shard I/O
// ---------------------------------------------------------------------------

namespace {
void write_header(std::ofstream& f, const ShardHeader& h) {
  f.write(ShardHeader::kMagic, 4);
  const uint32_t fields[7] = {h.version,  h.env_count,   h.steps_per_env, h.k_dense,
                              h.k_sparse, h.proprio_dim, h.action_dim};
  f.write(reinterpret_cast<const char*>(fields), sizeof fields);
}

ShardHeader read_header(std::ifstream& f, const std::string& path) {
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, ShardHeader::kMagic, 4) != 0)
    throw std::runtime_error("bad shard magic: " + path);
  uint32_t fields[7];
  f.read(reinterpret_cast<char*>(fields), sizeof fields);
  if (!f) throw std::runtime_error("truncated shard header: " + path);
  ShardHeader h;
  h.version = fields[0];
  h.env_count = fields[1];
  h.steps_per_env = fields[2];
  h.k_dense = fields[3];
  h.k_sparse = fields[4];
  h.proprio_dim = fields[5];
  h.action_dim = fields[6];
  if (h.version != 1) throw std::runtime_error("unsupported shard version: " + path);
  if (h.proprio_dim != 4 || h.action_dim != 2)
    throw std::runtime_error("unexpected record dims in shard: " + path);
  return h;
}

constexpr size_t kHeaderBytes = 4 + 7 * 4;
}  // namespace

struct ShardWriter::Impl {
  std::string path;
  ShardHeader header;
  std::ofstream file;
  size_t byte_budget = 0;
  size_t bytes = 0;
  long long records = 0;
  bool finished = false;

  void fail(const std::string& why) {
    file.close();
    std::error_code ec;
    std::filesystem::remove(path, ec);  // never leave a partial shard behind
    throw std::runtime_error("shard write failed (" + why + "): " + path);
  }
};

ShardWriter::ShardWriter(const std::string& path, const ShardHeader& header, size_t byte_budget)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->header = header;
  impl_->byte_budget = byte_budget;
  impl_->file.open(path, std::ios::binary);
  if (!impl_->file) throw std::runtime_error("cannot open shard for write: " + path);
  write_header(impl_->file, header);
  impl_->bytes = kHeaderBytes;
  if (!impl_->file) impl_->fail("header");
}

ShardWriter::~ShardWriter() {
  if (impl_ && !impl_->finished) {
    impl_->file.close();
    std::error_code ec;
    std::filesystem::remove(impl_->path, ec);
  }
}

void ShardWriter::append(const StepRecord& rec) {
  Impl& im = *impl_;
  const ShardHeader& h = im.header;
  if (rec.proprio.size() != h.proprio_dim || rec.dense.size() != h.k_dense ||
      rec.sparse.size() != h.k_sparse || rec.action.size() != h.action_dim)
    throw std::invalid_argument("record dims do not match shard header");
  const size_t need = h.record_stride();
  if (im.byte_budget > 0 && im.bytes + need > im.byte_budget) im.fail("disk budget exceeded");
  auto put = [&](const std::vector<float>& v) {
    im.file.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * 4));
  };
  put(rec.proprio);
  put(rec.dense);
  put(rec.sparse);
  put(rec.action);
  im.file.write(reinterpret_cast<const char*>(&rec.done), 1);
  if (!im.file) im.fail("io error");
  im.bytes += need;
  im.records += 1;
}

void ShardWriter::finish() {
  Impl& im = *impl_;
  const long long expect =
      static_cast<long long>(im.header.env_count) * im.header.steps_per_env;
  if (im.records != expect)
    im.fail("record count " + std::to_string(im.records) + " != " + std::to_string(expect));
  im.file.flush();
  if (!im.file) im.fail("flush");
  im.file.close();
  im.finished = true;
}

struct ShardReader::Impl {
  std::string path;
  ShardHeader header;
  mutable std::ifstream file;
};

ShardReader::ShardReader(const std::string& path) : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->file.open(path, std::ios::binary);
  if (!impl_->file) throw std::runtime_error("cannot open shard: " + path);
  impl_->header = read_header(impl_->file, path);
  const ShardHeader& h = impl_->header;
  const auto size = std::filesystem::file_size(path);
  const size_t expect =
      kHeaderBytes + h.record_stride() * static_cast<size_t>(h.env_count) * h.steps_per_env;
  if (size != expect)
    throw std::runtime_error("shard size mismatch (" + std::to_string(size) + " vs " +
                             std::to_string(expect) + "): " + path);
}

ShardReader::~ShardReader() = default;

const ShardHeader& ShardReader::header() const { return impl_->header; }

void ShardReader::read_into(int env, int t, StepRecord& rec) const {
  const ShardHeader& h = impl_->header;
  if (env < 0 || env >= static_cast<int>(h.env_count) || t < 0 ||
      t >= static_cast<int>(h.steps_per_env))
    throw std::out_of_range("shard record index out of range");
  const size_t offset =
      kHeaderBytes +
      h.record_stride() * (static_cast<size_t>(t) * h.env_count + static_cast<size_t>(env));
  impl_->file.seekg(static_cast<std::streamoff>(offset));
  rec.proprio.resize(h.proprio_dim);
  rec.dense.resize(h.k_dense);
  rec.sparse.resize(h.k_sparse);
  rec.action.resize(h.action_dim);
  auto get = [&](std::vector<float>& v) {
    impl_->file.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
  };
  get(rec.proprio);
  get(rec.dense);
  get(rec.sparse);
  get(rec.action);
  impl_->file.read(reinterpret_cast<char*>(&rec.done), 1);
  if (!impl_->file) throw std::runtime_error("shard read failed: " + impl_->path);
}

StepRecord ShardReader::read(int env, int t) const {
  StepRecord rec;
  read_into(env, t, rec);
  return rec;
}

// ---------------------------------------------------------------------------
// collect
// ---------------------------------------------------------------------------

CollectResult collect(const CollectConfig& cfg) {
  if (cfg.env_count < 1 || cfg.steps < 1) throw std::invalid_argument("collect needs envs > 0 and steps > 0");
  std::filesystem::create_directories(cfg.out_dir);

  const CheckpointInfo info = read_checkpoint_manifest(cfg.teacher_checkpoint + ".json");
  if (info.kind != "teacher")
    throw std::runtime_error("collect requires a teacher checkpoint, got kind=" + info.kind);
  const SamplePattern pattern = build_pattern(info.pattern);
  TeacherNet net(info.k_dense, info.k_sparse);
  if (net.params().arch_hash() != info.arch_hash)
    throw std::runtime_error("checkpoint architecture hash mismatch");
  net.params().load(cfg.teacher_checkpoint);

  const TerrainMap map = generate_terrain(cfg.terrain);
  VecEnv env(map, pattern, cfg.sim, RoverGeometry::six_wheel(), cfg.rewards, cfg.env_count,
             derive_seed(cfg.seed, "collect_env"));

  std::vector<Rng> action_rngs;
  if (cfg.stochastic)
    for (int e = 0; e < cfg.env_count; ++e)
      action_rngs.emplace_back(derive_seed(cfg.seed, "collect_action", static_cast<uint64_t>(e)));

  const int n_shards = (cfg.env_count + cfg.envs_per_shard - 1) / cfg.envs_per_shard;
  std::vector<std::unique_ptr<ShardWriter>> writers;
  CollectResult result;
  for (int s = 0; s < n_shards; ++s) {
    const int envs_here =
        std::min(cfg.envs_per_shard, cfg.env_count - s * cfg.envs_per_shard);
    ShardHeader h;
    h.env_count = static_cast<uint32_t>(envs_here);
    h.steps_per_env = static_cast<uint32_t>(cfg.steps);
    h.k_dense = static_cast<uint32_t>(info.k_dense);
    h.k_sparse = static_cast<uint32_t>(info.k_sparse);
    char name[64];
    std::snprintf(name, sizeof name, "/shard_%03d.rtsd", s);
    result.shard_paths.push_back(cfg.out_dir + name);
    writers.push_back(std::make_unique<ShardWriter>(result.shard_paths.back(), h));
  }

  const int n = cfg.env_count;
  std::vector<Observation> current = env.observe_all();
  StepRecord rec;
  for (int t = 0; t < cfg.steps; ++t) {
    Tensor2<float> proprio(n, TeacherNet::kProprioDim);
    Tensor2<float> dense(n, info.k_dense);
    Tensor2<float> sparse(n, info.k_sparse);
    for (int e = 0; e < n; ++e) {
      proprio(e, 0) = current[e].distance_m;
      proprio(e, 1) = current[e].heading_rad;
      proprio(e, 2) = current[e].prev_action.v_lin;
      proprio(e, 3) = current[e].prev_action.v_ang;
      std::copy(current[e].dense.begin(), current[e].dense.end(), dense.row(e));
      std::copy(current[e].sparse.begin(), current[e].sparse.end(), sparse.row(e));
    }
    TeacherNet::Cache cache;
    Tensor2<float> mean, value;
    net.forward(proprio, dense, sparse, mean, value, cache);

    Tensor2<float> acts = mean;
    if (cfg.stochastic)
      for (int e = 0; e < n; ++e) net.head().sample_row(mean, e, action_rngs[e], acts.row(e));

    std::vector<Action> actions(n);
    for (int e = 0; e < n; ++e) actions[e] = Action{acts(e, 0), acts(e, 1)};
    auto step = env.step(actions);

    for (int e = 0; e < n; ++e) {
      rec.proprio.assign(proprio.row(e), proprio.row(e) + proprio.cols);
      rec.dense.assign(dense.row(e), dense.row(e) + dense.cols);
      rec.sparse.assign(sparse.row(e), sparse.row(e) + sparse.cols);
      rec.action.assign(acts.row(e), acts.row(e) + acts.cols);
      rec.done = step[e].terminated ? 1 : 0;
      writers[e / cfg.envs_per_shard]->append(rec);
      result.records += 1;
    }
    for (int e = 0; e < n; ++e) current[e] = std::move(step[e].observation);
  }
  for (auto& w : writers) w->finish();
  return result;
}

// ---------------------------------------------------------------------------
// SequenceSampler
// ---------------------------------------------------------------------------

struct SequenceSampler::Impl {
  std::vector<std::unique_ptr<ShardReader>> readers;
  int seq_len = 0, batch_size = 0;
  uint64_t seed = 0;
  struct Start {
    int shard, env, t;
  };
  std::vector<Start> train_starts, val_starts;
  std::vector<size_t> order;
  size_t cursor = 0;
  long long epoch = 0;

  std::vector<Start>& set(bool validation) { return validation ? val_starts : train_starts; }
};

SequenceSampler::SequenceSampler(std::vector<std::string> shard_paths, int seq_len, int batch_size,
                                 uint64_t seed)
    : impl_(std::make_unique<Impl>()) {
  if (shard_paths.empty()) throw std::invalid_argument("no shards given");
  if (seq_len < 1 || batch_size < 1) throw std::invalid_argument("bad sampler parameters");
  impl_->seq_len = seq_len;
  impl_->batch_size = batch_size;
  impl_->seed = seed;
  for (const auto& p : shard_paths) impl_->readers.push_back(std::make_unique<ShardReader>(p));
  const ShardHeader& first = impl_->readers.front()->header();
  for (const auto& r : impl_->readers)
    if (r->header().k_dense != first.k_dense || r->header().k_sparse != first.k_sparse)
      throw std::runtime_error("shards have inconsistent heightmap dims");
  if (seq_len > static_cast<int>(first.steps_per_env))
    throw std::invalid_argument("seq_len exceeds steps_per_env");

  // enumerate valid starts: no done flag inside [t, t+L-1); done at the final
  // element is allowed
  StepRecord rec;
  for (size_t s = 0; s < impl_->readers.size(); ++s) {
    const ShardHeader& h = impl_->readers[s]->header();
    const int T = static_cast<int>(h.steps_per_env);
    for (int e = 0; e < static_cast<int>(h.env_count); ++e) {
      std::vector<uint8_t> done(T);
      for (int t = 0; t < T; ++t) {
        impl_->readers[s]->read_into(e, t, rec);
        done[t] = rec.done;
      }
      for (int t = 0; t + seq_len <= T; ++t) {
        bool ok = true;
        for (int l = 0; l + 1 < seq_len; ++l)
          if (done[t + l]) {
            ok = false;
            break;
          }
        if (ok) impl_->train_starts.push_back({static_cast<int>(s), e, t});
      }
    }
  }
  if (impl_->train_starts.empty())
    throw std::runtime_error("no valid sequence starts: every episode is shorter than seq_len");
}

SequenceSampler::~SequenceSampler() = default;

int SequenceSampler::k_dense() const { return static_cast<int>(impl_->readers[0]->header().k_dense); }
int SequenceSampler::k_sparse() const {
  return static_cast<int>(impl_->readers[0]->header().k_sparse);
}
size_t SequenceSampler::sequences_per_epoch() const { return impl_->train_starts.size(); }

void SequenceSampler::split(double validation_fraction, uint64_t split_seed) {
  if (validation_fraction < 0 || validation_fraction >= 1)
    throw std::invalid_argument("validation fraction must be in [0, 1)");
  std::vector<Impl::Start> all = impl_->train_starts;
  for (const auto& v : impl_->val_starts) all.push_back(v);
  Rng rng(derive_seed(split_seed, "dataset_split"));
  fisher_yates(all, rng);
  const size_t n_val = static_cast<size_t>(validation_fraction * static_cast<double>(all.size()));
  impl_->val_starts.assign(all.begin(), all.begin() + n_val);
  impl_->train_starts.assign(all.begin() + n_val, all.end());
  if (impl_->train_starts.empty()) throw std::runtime_error("validation split left no training data");
}

void SequenceSampler::begin_epoch(bool validation) {
  auto& starts = impl_->set(validation);
  impl_->order.resize(starts.size());
  for (size_t i = 0; i < starts.size(); ++i) impl_->order[i] = i;
  if (!validation) {
    Rng rng(derive_seed(impl_->seed, "epoch_shuffle", static_cast<uint64_t>(impl_->epoch)));
    fisher_yates(impl_->order, rng);
    impl_->epoch += 1;
  }
  impl_->cursor = 0;
}

bool SequenceSampler::next(SequenceBatch& batch, bool validation) {
  auto& starts = impl_->set(validation);
  if (impl_->cursor >= impl_->order.size() || starts.empty()) return false;
  const size_t remaining = impl_->order.size() - impl_->cursor;
  const int m = static_cast<int>(std::min<size_t>(impl_->batch_size, remaining));
  const int L = impl_->seq_len;
  const ShardHeader& h = impl_->readers[0]->header();

  batch.seq_len = L;
  batch.batch_size = m;
  batch.proprio.assign(L, Tensor2<float>(m, 4));
  batch.dense.assign(L, Tensor2<float>(m, static_cast<int>(h.k_dense)));
  batch.sparse.assign(L, Tensor2<float>(m, static_cast<int>(h.k_sparse)));
  batch.action.assign(L, Tensor2<float>(m, 2));

  StepRecord rec;
  for (int r = 0; r < m; ++r) {
    const auto& st = starts[impl_->order[impl_->cursor + r]];
    for (int l = 0; l < L; ++l) {
      impl_->readers[st.shard]->read_into(st.env, st.t + l, rec);
      std::copy(rec.proprio.begin(), rec.proprio.end(), batch.proprio[l].row(r));
      std::copy(rec.dense.begin(), rec.dense.end(), batch.dense[l].row(r));
      std::copy(rec.sparse.begin(), rec.sparse.end(), batch.sparse[l].row(r));
      std::copy(rec.action.begin(), rec.action.end(), batch.action[l].row(r));
    }
  }
  impl_->cursor += m;
  return true;
}

}  // namespace rover
