#ifndef ZIVOS_CORE_HPP
#define ZIVOS_CORE_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zivos/error.hpp"

namespace zivos {

using FrameIndex = std::int64_t;
using ObjectId = int;

struct Pixel {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Dense row-major raster. The tag parameter keeps masks, label maps and real
/// valued fields from being mixed up at call sites.
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int height, int width, T fill = T{}) : height_(height), width_(width) {
    if (height < 0 || width < 0) {
      throw Error(ErrorKind::invalid_argument, "negative raster dimensions");
    }
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }
  Raster(int height, int width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height < 0 || width < 0 ||
        data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
      throw Error(ErrorKind::shape_mismatch, "raster payload does not match dimensions");
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }
  bool contains(Pixel p) const noexcept { return contains(p.row, p.col); }

  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }
  T& operator[](Pixel p) { return data_[index(p.row, p.col)]; }
  const T& operator[](Pixel p) const { return data_[index(p.row, p.col)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  template <typename OtherT, typename OtherTag>
  bool same_shape(const Raster<OtherT, OtherTag>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

struct BinaryMaskTag {};
struct LabelMaskTag {};

/// One byte per pixel, 0 or 1.
using BinaryMask = Raster<std::uint8_t, BinaryMaskTag>;
/// Class id per pixel; 0 is background.
using LabelMask = Raster<std::uint8_t, LabelMaskTag>;

inline std::size_t count(const BinaryMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; }));
}

inline bool empty(const BinaryMask& mask) {
  return std::none_of(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; });
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorKind::shape_mismatch,
                std::string(what) + ": " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()));
  }
}

/// Tolerance on the per-pixel sum of class probabilities.
inline constexpr double kProbabilitySumTolerance = 1e-4;

/// Per-pixel categorical distribution over `classes` classes, class index
/// varying fastest. Construction validates every invariant; maps with loose
/// sums are rejected rather than renormalized.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  ProbabilityMap(int height, int width, int classes, std::vector<float> values)
      : height_(height), width_(width), classes_(classes), values_(std::move(values)) {
    validate();
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int classes() const noexcept { return classes_; }

  float operator()(int row, int col, int cls) const {
    return values_[offset(row, col) + static_cast<std::size_t>(cls)];
  }

  std::span<const float> pixel(int row, int col) const {
    return std::span<const float>(values_).subspan(offset(row, col),
                                                   static_cast<std::size_t>(classes_));
  }

  std::span<const float> values() const noexcept { return values_; }

  template <typename T, typename Tag>
  bool same_shape(const Raster<T, Tag>& r) const noexcept {
    return height_ == r.height() && width_ == r.width();
  }

  friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;

 private:
  std::size_t offset(int row, int col) const noexcept {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) *
           static_cast<std::size_t>(classes_);
  }

  void validate() const {
    if (height_ < 0 || width_ < 0) {
      throw Error(ErrorKind::invalid_argument, "negative probability map dimensions");
    }
    if (classes_ < 1) {
      throw Error(ErrorKind::invalid_argument, "probability map needs at least one class");
    }
    const auto expected = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_) *
                          static_cast<std::size_t>(classes_);
    if (values_.size() != expected) {
      throw Error(ErrorKind::shape_mismatch, "probability payload does not match H*W*C");
    }
    for (std::size_t px = 0; px < expected; px += static_cast<std::size_t>(classes_)) {
      double sum = 0.0;
      for (int c = 0; c < classes_; ++c) {
        const float v = values_[px + static_cast<std::size_t>(c)];
        if (!(v >= 0.0f && v <= 1.0f)) {
          throw Error(ErrorKind::invalid_probability,
                      "probability outside [0,1] at element " + std::to_string(px + c));
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
        throw Error(ErrorKind::invalid_probability,
                    "per-pixel probabilities sum to " + std::to_string(sum) + " at pixel " +
                        std::to_string(px / static_cast<std::size_t>(classes_)));
      }
    }
  }

  int height_ = 0;
  int width_ = 0;
  int classes_ = 1;
  std::vector<float> values_;
};

enum class Polarity { positive, negative };
enum class ClickOrigin { init, pseudo, user };

inline std::string to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

inline std::string to_string(ClickOrigin o) {
  switch (o) {
    case ClickOrigin::init: return "init";
    case ClickOrigin::pseudo: return "pseudo";
    case ClickOrigin::user: return "user";
  }
  return "unknown";
}

struct Click {
  FrameIndex frame = 0;
  ObjectId object = 1;
  int row = 0;
  int col = 0;
  Polarity polarity = Polarity::positive;
  ClickOrigin origin = ClickOrigin::user;

  Pixel pixel() const noexcept { return {row, col}; }

  friend bool operator==(const Click&, const Click&) = default;
};

/// Predicted class per pixel; ties go to the lowest class id.
inline LabelMask argmax_labels(const ProbabilityMap& prob) {
  if (prob.classes() > 256) {
    throw Error(ErrorKind::invalid_argument, "label masks hold at most 256 classes");
  }
  LabelMask labels(prob.height(), prob.width());
  for (int r = 0; r < prob.height(); ++r) {
    for (int c = 0; c < prob.width(); ++c) {
      const auto p = prob.pixel(r, c);
      // max_element returns the first maximum, which is the lowest id.
      const auto best = std::max_element(p.begin(), p.end());
      labels(r, c) = static_cast<std::uint8_t>(std::distance(p.begin(), best));
    }
  }
  return labels;
}

inline BinaryMask extract_object_mask(const LabelMask& labels, ObjectId object) {
  if (object < 1) {
    throw Error(ErrorKind::invalid_argument, "object ids start at 1");
  }
  BinaryMask mask(labels.height(), labels.width());
  auto out = mask.values();
  auto in = labels.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = static_cast<int>(in[i]) == object ? 1 : 0;
  }
  return mask;
}

}  // namespace zivos

#endif  // ZIVOS_CORE_HPP
