#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace earlystop {

// 64-bit avalanche finalizer (splitmix64).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Splitmix64 stream: state walks by the golden-ratio increment, outputs pass
// through mix64. The derivation of substreams from (master seed, trial index,
// node index) is fixed here so runs can be replayed from any implementation:
//
//   trial_seed  = mix64(master + GOLDEN * (trial + 1))
//   stream_seed = mix64(trial_seed + GOLDEN * (node + 1))
//   output_k    = mix64(stream_seed + GOLDEN * (k + 1))
class RngStream {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1} by 128-bit multiply-shift.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  // Standard normal, Box-Muller; consumes exactly two uniforms per pair.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd gaussian_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = next_gaussian();
    return v;
  }

  // Uniformly distributed direction on the unit sphere.
  Eigen::VectorXd unit_vector(Eigen::Index d) {
    Eigen::VectorXd v = gaussian_vector(d);
    double n = v.norm();
    while (n == 0.0) {
      v = gaussian_vector(d);
      n = v.norm();
    }
    return v / n;
  }

  // Uniform draw from the ball of the given radius.
  Eigen::VectorXd ball_vector(Eigen::Index d, double radius) {
    const double r = radius * std::pow(next_double(), 1.0 / static_cast<double>(d));
    return r * unit_vector(d);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Reserved node ids for draws that must not collide with algorithm nodes.
inline constexpr std::uint64_t kTrainSampleNode = 0xFFFF0001ULL;
inline constexpr std::uint64_t kValSampleNode = 0xFFFF0002ULL;
inline constexpr std::uint64_t kProbeNode = 0xFFFF0003ULL;

// Substream factory for one Monte Carlo trial. Node 0 is reserved for
// auxiliary draws (bias noise); algorithm nodes use 1..M, so a single-node
// decentralized run consumes exactly the stream of the centralized one.
class TrialRng {
 public:
  TrialRng(std::uint64_t master_seed, std::uint64_t trial_index)
      : trial_seed_(mix64(master_seed + RngStream::kGolden * (trial_index + 1))) {}

  RngStream stream(std::uint64_t node_index) const {
    return RngStream(mix64(trial_seed_ + RngStream::kGolden * (node_index + 1)));
  }

  std::uint64_t trial_seed() const { return trial_seed_; }

 private:
  std::uint64_t trial_seed_;
};

}  // namespace earlystop
