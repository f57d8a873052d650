#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace exitbsde {

// Counter-based random numbers. Every variate is a pure function of
// (key, path_id, draw index), so path simulations can run in any order on any
// number of workers and still reproduce bit-identically.

/// One 128-bit Philox4x32-10 block.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t key, std::uint64_t ctr_hi,
                                        std::uint64_t ctr_lo);

/// Derive an independent sub-key from a parent seed and a stream label
/// ("simulate", "train", "refine", ...).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);

/// Derive an independent sub-key from a parent seed and a child index.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t child);

/// Identifies one per-path stream: (sub-key, path id).
struct StreamSpec {
  std::uint64_t key = 0;
  std::uint64_t path_id = 0;
};

/// Stateless-indexable stream of standard normals and uniforms.
/// normal_at(i) is pure; next_normal() is the sequential view with a cached
/// Box-Muller pair.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t key, std::uint64_t path_id) : spec_{key, path_id} {}
  explicit RngStream(StreamSpec spec) : spec_(spec) {}

  double normal_at(std::uint64_t index) const;
  double uniform_at(std::uint64_t index) const;  // in [0,1)

  double next_normal();
  double next_uniform();

  void seek(std::uint64_t index) { next_ = index; block_valid_ = false; }
  std::uint64_t position() const { return next_; }
  const StreamSpec& spec() const { return spec_; }

 private:
  void load_block(std::uint64_t block) const;

  StreamSpec spec_{};
  std::uint64_t next_ = 0;
  std::uint64_t uniform_next_ = 0;
  mutable std::uint64_t cached_block_ = 0;
  mutable bool block_valid_ = false;
  mutable double pair_[2] = {0, 0};
};

/// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9
/// relative accuracy). Used for low-discrepancy direction sampling, not for
/// the simulation increments themselves.
double inverse_normal_cdf(double p);

}  // namespace exitbsde
