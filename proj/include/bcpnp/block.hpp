#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bcpnp {

using Eigen::Index;
using Vector = Eigen::VectorXd;

/// Partition of R^n into b >= 1 contiguous blocks. Block indices are 1-based.
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<Index> sizes);

  int num_blocks() const { return static_cast<int>(sizes_.size()); }
  Index total() const { return total_; }
  Index size(int block) const;
  Index offset(int block) const;
  const std::vector<Index>& sizes() const { return sizes_; }

  bool operator==(const BlockLayout& other) const { return sizes_ == other.sizes_; }

  void check_index(int block) const;

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// The block-structured state x = (x_1, ..., x_b).
///
/// Complex-valued blocks are stored as interleaved (re, im) pairs, so every
/// norm and inner product below is the complex Euclidean one.
class BlockVector {
 public:
  BlockVector() = default;
  explicit BlockVector(BlockLayout layout);  // zeros
  BlockVector(BlockLayout layout, Vector data);

  static BlockVector from_blocks(const std::vector<Vector>& blocks);

  const BlockLayout& layout() const { return layout_; }
  int num_blocks() const { return layout_.num_blocks(); }
  const Vector& data() const { return data_; }

  /// Copy of block i (U_i^T x).
  Vector block(int i) const;
  /// Read-only view of block i; invalidated when this vector is destroyed.
  Eigen::VectorBlock<const Vector> block_view(int i) const;

  /// New vector equal to *this with block i replaced by v.
  BlockVector with_block(int i, const Vector& v) const;

  double norm() const { return data_.norm(); }
  double squared_norm() const { return data_.squaredNorm(); }
  bool all_finite() const { return data_.allFinite(); }

  BlockVector operator-(const BlockVector& other) const;
  BlockVector operator+(const BlockVector& other) const;
  BlockVector operator*(double s) const;

  bool operator==(const BlockVector& other) const;

 private:
  BlockLayout layout_;
  Vector data_;
};

Vector extract(const BlockVector& x, int i);
BlockVector inject(const BlockVector& x, int i, const Vector& v);

enum class ScheduleKind { sequential, epoch_shuffle, random_iid };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

/// Block-selection rule i_k. next_index is a pure function of
/// (kind, seed, b, k), so index streams never depend on call order.
class BlockSchedule {
 public:
  BlockSchedule(ScheduleKind kind, int num_blocks, std::uint64_t seed = 0);

  ScheduleKind kind() const { return kind_; }
  int num_blocks() const { return num_blocks_; }
  std::uint64_t seed() const { return seed_; }

  /// k >= 1; returns an index in {1, ..., b}.
  int next_index(std::int64_t k) const;

  /// Permutation used in epoch e (0-based) of the epoch-shuffle rule.
  std::vector<int> epoch_permutation(std::int64_t epoch) const;

  BlockSchedule with_seed(std::uint64_t seed) const { return {kind_, num_blocks_, seed}; }

 private:
  ScheduleKind kind_;
  int num_blocks_;
  std::uint64_t seed_;
};

}  // namespace bcpnp
