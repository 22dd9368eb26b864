#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace neuroboot {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

enum class Topic : std::uint8_t { Bio = 0, Int = 1 };
enum class SentenceType : std::uint8_t { Type1 = 0, Type2 = 1 };

struct TrialLabel {
  Topic topic = Topic::Bio;
  SentenceType type = SentenceType::Type1;

  friend bool operator==(const TrialLabel&, const TrialLabel&) = default;
};

/// File code: 0=Bio/Type1, 1=Bio/Type2, 2=Int/Type1, 3=Int/Type2.
std::uint8_t label_code(TrialLabel label);
/// Throws InvalidArgument for codes > 3.
TrialLabel label_from_code(std::uint8_t code);

const char* to_string(Topic topic);
const char* to_string(SentenceType type);

/// Half-open time interval [start_s, end_s) relative to stimulus onset.
struct TimeWindow {
  double start_s = 0.0;
  double end_s = 0.0;

  TimeWindow() = default;
  TimeWindow(double start, double end);

  /// Parses "start:end", e.g. "-0.2:0".
  static TimeWindow parse(const std::string& text);
};

/// Index range [first, last) of samples whose time lies in a window.
struct SampleRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first; }
  bool empty() const { return last <= first; }
};

/// Sample s is inside w when t0 + s/fs lies in [w.start_s, w.end_s).
/// First index is ceil((w.start_s - t0) * fs) clamped to [0, n_samples].
SampleRange window_samples(double t0, double fs, std::size_t n_samples, const TimeWindow& w);

/// Dense (n × rows × cols) tensor of doubles; each (rows × cols) slab is
/// contiguous and row-major.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t n, std::size_t rows, std::size_t cols, double fill = 0.0)
      : n_(n), rows_(rows), cols_(cols), data_(n * rows * cols, fill) {}
  Tensor3(std::size_t n, std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t n() const { return n_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t slab_size() const { return rows_ * cols_; }

  std::span<double> slab(std::size_t i) { return {data_.data() + i * slab_size(), slab_size()}; }
  std::span<const double> slab(std::size_t i) const {
    return {data_.data() + i * slab_size(), slab_size()};
  }

  double& operator()(std::size_t i, std::size_t r, std::size_t c) {
    return data_[(i * rows_ + r) * cols_ + c];
  }
  double operator()(std::size_t i, std::size_t r, std::size_t c) const {
    return data_[(i * rows_ + r) * cols_ + c];
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Epoched trials of one subject: trials × channels × samples, plus labels
/// and timing. Validated on construction and immutable afterwards.
class EpochSet {
 public:
  /// Throws InvalidArgument when labels and trial count disagree, fs <= 0,
  /// the tensor has no channels or samples, or any value is non-finite.
  EpochSet(std::string subject_id, double fs, double t0, std::vector<TrialLabel> labels,
           Tensor3 data);

  const std::string& subject_id() const { return subject_id_; }
  double fs() const { return fs_; }
  double t0() const { return t0_; }
  const std::vector<TrialLabel>& labels() const { return labels_; }
  const Tensor3& data() const { return data_; }

  std::size_t n_trials() const { return data_.n(); }
  std::size_t n_channels() const { return data_.rows(); }
  std::size_t n_samples() const { return data_.cols(); }

  std::span<const double> trial(std::size_t i) const { return data_.slab(i); }

  double time_of(std::size_t sample) const { return t0_ + static_cast<double>(sample) / fs_; }
  /// End of the span covered by the samples, t0 + n_samples / fs.
  double end_time() const { return time_of(n_samples()); }

  SampleRange samples_in(const TimeWindow& w) const {
    return window_samples(t0_, fs_, n_samples(), w);
  }

  friend bool operator==(const EpochSet&, const EpochSet&) = default;

 private:
  std::string subject_id_;
  double fs_;
  double t0_;
  std::vector<TrialLabel> labels_;
  Tensor3 data_;
};

using LabelFilter = std::function<bool(const TrialLabel&)>;

/// Trials whose label passes the filter, original order preserved.
EpochSet select_trials(const EpochSet& e, const LabelFilter& keep);

/// Subset by explicit trial indices, in the order given.
EpochSet take_trials(const EpochSet& e, std::span<const std::size_t> indices);

/// Samples inside the half-open window. Throws InvalidArgument when the
/// window does not intersect the epoch.
EpochSet crop(const EpochSet& e, const TimeWindow& w);

LabelFilter topic_is(Topic topic);
LabelFilter type_is(SentenceType type);

}  // namespace neuroboot
