#include "specvla/action_space.hpp"

#include <algorithm>
#include <cmath>

namespace specvla {

namespace {

void check_interval(const Interval& range) {
  if (!(range.low < range.high) || !std::isfinite(range.low) || !std::isfinite(range.high)) {
    throw ActionSpaceError("dimension bounds require finite low < high");
  }
}

}  // namespace

DimensionBounds::DimensionBounds()
    : dims_{{{-0.05, 0.05}, {-0.05, 0.05}, {-0.05, 0.05},
             {-0.25, 0.25}, {-0.25, 0.25}, {-0.25, 0.25},
             {0.0, 1.0}}} {}

DimensionBounds::DimensionBounds(const std::array<Interval, kActionDims>& dims) : dims_(dims) {
  for (const auto& d : dims_) check_interval(d);
}

DimensionBounds DimensionBounds::uniform(double low, double high) {
  std::array<Interval, kActionDims> dims;
  dims.fill(Interval{low, high});
  return DimensionBounds(dims);
}

ActionChunk ActionChunk::from_span(std::span<const ActionToken> tokens) {
  if (tokens.size() != kActionDims) {
    throw ActionSpaceError("action chunk needs exactly 7 tokens, got " +
                           std::to_string(tokens.size()));
  }
  std::array<ActionToken, kActionDims> arr{};
  std::copy(tokens.begin(), tokens.end(), arr.begin());
  return ActionChunk(arr);
}

ActionVocab::ActionVocab(int size) : size_(size) {
  if (size < 2) throw ActionSpaceError("vocabulary needs at least 2 bins");
}

ActionToken ActionVocab::token(int bin) const {
  if (bin < 0 || bin >= size_) {
    throw ActionSpaceError("bin " + std::to_string(bin) + " outside vocabulary of " +
                           std::to_string(size_));
  }
  return ActionToken{bin};
}

double ActionVocab::detokenize(ActionToken t, const Interval& range) const {
  const double width = (range.high - range.low) / size_;
  return range.low + (t.bin + 0.5) * width;
}

std::array<double, kActionDims> ActionVocab::detokenize(const ActionChunk& chunk,
                                                        const DimensionBounds& bounds) const {
  std::array<double, kActionDims> out{};
  for (std::size_t d = 0; d < kActionDims; ++d) out[d] = detokenize(chunk[d], bounds[d]);
  return out;
}

ActionToken ActionVocab::tokenize(double value, const Interval& range) const {
  if (std::isnan(value)) value = range.low;
  const double v = std::clamp(value, range.low, range.high);
  const double scaled = std::floor((v - range.low) / (range.high - range.low) * size_);
  const auto bin = static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(size_ - 1)));
  return ActionToken{bin};
}

ActionChunk ActionVocab::tokenize(const std::array<double, kActionDims>& values,
                                  const DimensionBounds& bounds) const {
  std::array<ActionToken, kActionDims> out{};
  for (std::size_t d = 0; d < kActionDims; ++d) out[d] = tokenize(values[d], bounds[d]);
  return ActionChunk(out);
}

std::vector<ActionChunk> split_chunks(std::span<const ActionToken> tokens, const ActionVocab& vocab) {
  if (tokens.size() % kActionDims != 0) {
    throw ActionSpaceError("token stream length " + std::to_string(tokens.size()) +
                           " is not a multiple of 7");
  }
  std::vector<ActionChunk> chunks;
  chunks.reserve(tokens.size() / kActionDims);
  for (std::size_t i = 0; i < tokens.size(); i += kActionDims) {
    auto slice = tokens.subspan(i, kActionDims);
    for (auto t : slice) {
      if (!vocab.contains(t)) throw ActionSpaceError("token outside vocabulary");
    }
    chunks.push_back(ActionChunk::from_span(slice));
  }
  return chunks;
}

std::string to_string(ActionDim dim) {
  switch (dim) {
    case ActionDim::kPosX: return "pos_x";
    case ActionDim::kPosY: return "pos_y";
    case ActionDim::kPosZ: return "pos_z";
    case ActionDim::kRotX: return "rot_x";
    case ActionDim::kRotY: return "rot_y";
    case ActionDim::kRotZ: return "rot_z";
    case ActionDim::kGripper: return "gripper";
  }
  return "unknown";
}

}  // namespace specvla
