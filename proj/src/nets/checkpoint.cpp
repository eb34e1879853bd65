#include "sata/nets/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "sata/harness/fs.hpp"

namespace sata::nets {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'T', 'A', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  void block(const Vec<float>& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) u32(std::bit_cast<std::uint32_t>(v[i]));
  }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  void expect_magic() {
    need(sizeof kMagic);
    if (std::memcmp(in_.data(), kMagic, sizeof kMagic) != 0) throw FormatError("checkpoint magic mismatch");
    at_ += sizeof kMagic;
  }
  Vec<float> block(std::size_t expected, const char* name) {
    const std::uint64_t n = u64();
    if (n != expected) {
      throw FormatError(std::string("checkpoint block '") + name + "' has " + std::to_string(n) + " values, expected " +
                        std::to_string(expected));
    }
    Vec<float> v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = std::bit_cast<float>(u32());
    return v;
  }
  bool done() const { return at_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (at_ + n > in_.size()) throw FormatError("checkpoint is truncated");
  }
  std::uint64_t le(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[at_ + i])) << (8 * i);
    at_ += static_cast<std::size_t>(bytes);
    return v;
  }
  const std::string& in_;
  std::size_t at_ = 0;
};

void write_spec(Writer& w, const MlpSpec& s) {
  w.u32(static_cast<std::uint32_t>(s.input));
  w.u32(static_cast<std::uint32_t>(s.output));
  w.u32(static_cast<std::uint32_t>(s.hidden.size()));
  for (int h : s.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(s.activation));
}

MlpSpec read_spec(Reader& r) {
  MlpSpec s;
  s.input = static_cast<int>(r.u32());
  s.output = static_cast<int>(r.u32());
  const std::uint32_t n = r.u32();
  if (n > 64) throw FormatError("checkpoint network has an implausible layer count");
  s.hidden.resize(n);
  for (auto& h : s.hidden) h = static_cast<int>(r.u32());
  const std::uint32_t act = r.u32();
  if (act > static_cast<std::uint32_t>(Activation::Relu)) throw FormatError("checkpoint activation id is unknown");
  s.activation = static_cast<Activation>(act);
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint network spec is invalid: ") + e.what());
  }
  return s;
}

constexpr std::uint32_t kBlockCount = 12;

}  // namespace

std::string serialize_checkpoint(const PolicyBundle& b) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(b.joints));
  w.u64(b.iteration);
  w.f64(b.learning_rate);
  w.u64(b.policy_adam.step);
  w.u64(b.estimator_adam.step);
  write_spec(w, b.actor.spec());
  write_spec(w, b.critic.spec());
  write_spec(w, b.estimator.spec());
  w.u32(kBlockCount);
  w.block(b.actor.params());
  w.block(b.log_std);
  w.block(b.critic.params());
  w.block(b.estimator.params());
  w.block(b.obs_scaling.offset);
  w.block(b.obs_scaling.scale);
  w.block(b.est_scaling.offset);
  w.block(b.est_scaling.scale);
  w.block(b.policy_adam.m);
  w.block(b.policy_adam.v);
  w.block(b.estimator_adam.m);
  w.block(b.estimator_adam.v);
  return w.take();
}

PolicyBundle parse_checkpoint(const std::string& bytes, std::optional<int> expected_joints) {
  Reader r(bytes);
  r.expect_magic();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  PolicyBundle b;
  b.joints = static_cast<int>(r.u32());
  if (expected_joints && *expected_joints != b.joints) {
    throw FormatError("checkpoint was written for " + std::to_string(b.joints) + " joints, config has " +
                      std::to_string(*expected_joints));
  }
  b.iteration = r.u64();
  b.learning_rate = r.f64();
  b.policy_adam.step = r.u64();
  b.estimator_adam.step = r.u64();
  const MlpSpec actor = read_spec(r);
  const MlpSpec critic = read_spec(r);
  const MlpSpec estimator = read_spec(r);
  const int obs_width = 12 + 4 * b.joints;
  if (actor.input != obs_width || actor.output != b.joints || critic.input != obs_width || critic.output != 1 ||
      estimator.input != kEstimatorFrames * estimator_frame_width(b.joints) || estimator.output != 3) {
    throw FormatError("checkpoint network widths do not match its joint count");
  }
  b.actor = Mlp<float>(actor);
  b.critic = Mlp<float>(critic);
  b.estimator = Mlp<float>(estimator);
  if (r.u32() != kBlockCount) throw FormatError("checkpoint block count mismatch");
  b.actor.params() = r.block(b.actor.size(), "actor");
  b.log_std = r.block(static_cast<std::size_t>(b.joints), "log_std");
  b.critic.params() = r.block(b.critic.size(), "critic");
  b.estimator.params() = r.block(b.estimator.size(), "estimator");
  const auto est_width = static_cast<std::size_t>(estimator.input);
  b.obs_scaling.offset = r.block(static_cast<std::size_t>(obs_width), "obs_offset");
  b.obs_scaling.scale = r.block(static_cast<std::size_t>(obs_width), "obs_scale");
  b.est_scaling.offset = r.block(est_width, "est_offset");
  b.est_scaling.scale = r.block(est_width, "est_scale");
  b.policy_adam.m = r.block(b.policy_parameter_count(), "policy_adam_m");
  b.policy_adam.v = r.block(b.policy_parameter_count(), "policy_adam_v");
  b.estimator_adam.m = r.block(b.estimator.size(), "estimator_adam_m");
  b.estimator_adam.v = r.block(b.estimator.size(), "estimator_adam_v");
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return b;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyBundle& bundle) {
  fs::write_atomic(path, serialize_checkpoint(bundle));
}

PolicyBundle load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_joints) {
  return parse_checkpoint(fs::read_file(path), expected_joints);
}

}  // namespace sata::nets
