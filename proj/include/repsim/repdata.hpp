#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repsim {

enum class RepState { raw, normalized };

/// A named n x k feature matrix: one row per sample, one column per feature.
///
/// Construction validates the data (finite, n >= 2, k >= 1). A representation
/// tagged `normalized` must additionally have centered columns and unit mean
/// squared row norm; use normalize() to obtain one.
class Representation {
 public:
  Representation(std::string name, Eigen::MatrixXd data,
                 RepState state = RepState::raw);

  const std::string& name() const noexcept { return name_; }
  const Eigen::MatrixXd& data() const noexcept { return data_; }
  RepState state() const noexcept { return state_; }
  bool is_normalized() const noexcept { return state_ == RepState::normalized; }

  Eigen::Index samples() const noexcept { return data_.rows(); }
  Eigen::Index features() const noexcept { return data_.cols(); }

  Representation renamed(std::string name) const;

  /// Subset of rows, in the given order. The result is raw.
  Representation select_rows(std::span<const Eigen::Index> rows) const;

 private:
  std::string name_;
  Eigen::MatrixXd data_;
  RepState state_;
};

/// Centers columns, then scales so that (1/n) sum_i |row_i|^2 = 1.
/// Throws NumericalError("degenerate representation") if all rows coincide.
Representation normalize(const Representation& rep);

// ---------------------------------------------------------------------------
// File formats

/// Comma-separated numbers, one sample per line. Name is the file stem.
Representation load_csv(const std::filesystem::path& path, bool has_header = false);
/// Writes shortest round-trip decimal for every value.
void save_csv(const Representation& rep, const std::filesystem::path& path);

/// Little-endian binary: "REPM", u32 version (=1), u64 n, u64 k, n*k binary64
/// values in row-major order.
Representation load_repm(const std::filesystem::path& path);
void save_repm(const Representation& rep, const std::filesystem::path& path);

std::string encode_repm(const Representation& rep);
Representation decode_repm(std::string_view bytes, std::string name);

/// Dispatches on extension: ".repm" is binary, everything else is CSV.
Representation load_representation(const std::filesystem::path& path,
                                   bool has_header = false);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// ---------------------------------------------------------------------------
// Synthetic data

enum class SynthFamily { gaussian, rotated_copy, linear_map, noisy_copy, lowrank };

struct SynthSpec {
  std::size_t n = 0;
  std::size_t k = 0;
  SynthFamily family = SynthFamily::gaussian;
  std::uint64_t seed = 0;
  double sigma = 0.0;    // noisy_copy noise level
  std::size_t rank = 1;  // lowrank subspace dimension
  double rho = 0.0;      // gaussian: per-coordinate correlation of the pair

  void validate() const;
};

SynthFamily parse_synth_family(std::string_view name);
std::string_view to_string(SynthFamily family);

/// Deterministic in `spec.seed`. Families:
///   gaussian      (phi, psi), psi = rho*phi + sqrt(1-rho^2)*noise per coordinate
///   rotated_copy  (phi, U phi), U Haar-random orthogonal
///   linear_map    (phi, M phi), M random invertible with condition number <= 100
///   noisy_copy    (phi, phi + sigma*G)
///   lowrank       single rep whose rows span a rank-r subspace (+1e-8 jitter)
/// Every returned representation is normalized.
std::vector<Representation> synthesize(const SynthSpec& spec);

/// Haar-distributed orthogonal d x d matrix (QR of a Gaussian matrix with the
/// sign of R's diagonal folded into Q).
template <typename Rng>
Eigen::MatrixXd haar_orthogonal(Eigen::Index d, Rng& rng);

/// Matrix of i.i.d. standard normal entries.
template <typename Rng>
Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace repsim

#include "repsim/detail/random_matrix.hpp"
