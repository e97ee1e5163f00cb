#include "bcpnp/block.hpp"

#include <numeric>

#include "bcpnp/random.hpp"

namespace bcpnp {

BlockLayout::BlockLayout(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("BlockLayout: need at least one block");
  offsets_.reserve(sizes_.size());
  for (Index n : sizes_) {
    if (n < 1) throw std::invalid_argument("BlockLayout: block sizes must be positive");
    offsets_.push_back(total_);
    total_ += n;
  }
}

void BlockLayout::check_index(int block) const {
  if (block < 1 || block > num_blocks()) {
    throw std::out_of_range("block index " + std::to_string(block) + " outside 1.." +
                            std::to_string(num_blocks()));
  }
}

Index BlockLayout::size(int block) const {
  check_index(block);
  return sizes_[block - 1];
}

Index BlockLayout::offset(int block) const {
  check_index(block);
  return offsets_[block - 1];
}

BlockVector::BlockVector(BlockLayout layout)
    : layout_(std::move(layout)), data_(Vector::Zero(layout_.total())) {}

BlockVector::BlockVector(BlockLayout layout, Vector data)
    : layout_(std::move(layout)), data_(std::move(data)) {
  if (data_.size() != layout_.total()) {
    throw std::invalid_argument("BlockVector: data length " + std::to_string(data_.size()) +
                                " does not match layout total " +
                                std::to_string(layout_.total()));
  }
}

BlockVector BlockVector::from_blocks(const std::vector<Vector>& blocks) {
  std::vector<Index> sizes;
  sizes.reserve(blocks.size());
  for (const auto& b : blocks) sizes.push_back(b.size());
  BlockLayout layout(sizes);
  Vector data(layout.total());
  for (int i = 1; i <= layout.num_blocks(); ++i) {
    data.segment(layout.offset(i), layout.size(i)) = blocks[i - 1];
  }
  return {std::move(layout), std::move(data)};
}

Vector BlockVector::block(int i) const { return block_view(i); }

Eigen::VectorBlock<const Vector> BlockVector::block_view(int i) const {
  return data_.segment(layout_.offset(i), layout_.size(i));
}

BlockVector BlockVector::with_block(int i, const Vector& v) const {
  if (v.size() != layout_.size(i)) {
    throw std::invalid_argument("inject: block " + std::to_string(i) + " expects length " +
                                std::to_string(layout_.size(i)) + ", got " +
                                std::to_string(v.size()));
  }
  BlockVector out = *this;
  out.data_.segment(layout_.offset(i), v.size()) = v;
  return out;
}

BlockVector BlockVector::operator-(const BlockVector& other) const {
  if (!(layout_ == other.layout_)) throw std::invalid_argument("BlockVector: layout mismatch");
  return {layout_, data_ - other.data_};
}

BlockVector BlockVector::operator+(const BlockVector& other) const {
  if (!(layout_ == other.layout_)) throw std::invalid_argument("BlockVector: layout mismatch");
  return {layout_, data_ + other.data_};
}

BlockVector BlockVector::operator*(double s) const { return {layout_, data_ * s}; }

bool BlockVector::operator==(const BlockVector& other) const {
  return layout_ == other.layout_ && data_.size() == other.data_.size() &&
         (data_.array() == other.data_.array()).all();
}

Vector extract(const BlockVector& x, int i) { return x.block(i); }

BlockVector inject(const BlockVector& x, int i, const Vector& v) { return x.with_block(i, v); }

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "sequential") return ScheduleKind::sequential;
  if (name == "epoch-shuffle") return ScheduleKind::epoch_shuffle;
  if (name == "random-iid") return ScheduleKind::random_iid;
  throw std::invalid_argument("unknown block schedule '" + name + "'");
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::sequential: return "sequential";
    case ScheduleKind::epoch_shuffle: return "epoch-shuffle";
    case ScheduleKind::random_iid: return "random-iid";
  }
  return "unknown";
}

BlockSchedule::BlockSchedule(ScheduleKind kind, int num_blocks, std::uint64_t seed)
    : kind_(kind), num_blocks_(num_blocks), seed_(seed) {
  if (num_blocks < 1) throw std::invalid_argument("BlockSchedule: need b >= 1");
}

std::vector<int> BlockSchedule::epoch_permutation(std::int64_t epoch) const {
  std::vector<int> perm(num_blocks_);
  std::iota(perm.begin(), perm.end(), 1);
  Rng rng(derive_seed(seed_, 0x5348554646ULL, static_cast<std::uint64_t>(epoch)));
  // Fisher-Yates
  for (int i = num_blocks_ - 1; i > 0; --i) {
    const auto j = static_cast<int>(bounded(rng(), static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

int BlockSchedule::next_index(std::int64_t k) const {
  if (k < 1) throw std::invalid_argument("BlockSchedule: iteration counter starts at 1");
  const auto b = static_cast<std::int64_t>(num_blocks_);
  switch (kind_) {
    case ScheduleKind::sequential:
      return static_cast<int>(1 + (k - 1) % b);
    case ScheduleKind::epoch_shuffle:
      return epoch_permutation((k - 1) / b)[(k - 1) % b];
    case ScheduleKind::random_iid: {
      const std::uint64_t draw = derive_seed(seed_, 0x494944ULL, static_cast<std::uint64_t>(k));
      return 1 + static_cast<int>(bounded(draw, static_cast<std::uint64_t>(b)));
    }
  }
  return 1;
}

}  // namespace bcpnp
