#include "neuroboot/core.hpp"

#include <cmath>
#include <sstream>

namespace neuroboot {

std::uint8_t label_code(TrialLabel label) {
  return static_cast<std::uint8_t>(static_cast<unsigned>(label.topic) * 2u +
                                   static_cast<unsigned>(label.type));
}

TrialLabel label_from_code(std::uint8_t code) {
  if (code > 3) {
    throw InvalidArgument("unknown label code " + std::to_string(code));
  }
  return TrialLabel{static_cast<Topic>(code / 2), static_cast<SentenceType>(code % 2)};
}

const char* to_string(Topic topic) { return topic == Topic::Bio ? "Bio" : "Int"; }

const char* to_string(SentenceType type) {
  return type == SentenceType::Type1 ? "Type1" : "Type2";
}

TimeWindow::TimeWindow(double start, double end) : start_s(start), end_s(end) {
  if (!std::isfinite(start) || !std::isfinite(end) || !(start < end)) {
    std::ostringstream msg;
    msg << "invalid time window [" << start << ", " << end << ")";
    throw InvalidArgument(msg.str());
  }
}

TimeWindow TimeWindow::parse(const std::string& text) {
  const auto colon = text.find(':', 1);
  if (colon == std::string::npos) {
    throw InvalidArgument("time window must look like start:end, got '" + text + "'");
  }
  try {
    std::size_t used_a = 0;
    std::size_t used_b = 0;
    const std::string a = text.substr(0, colon);
    const std::string b = text.substr(colon + 1);
    const double start = std::stod(a, &used_a);
    const double end = std::stod(b, &used_b);
    if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing");
    return TimeWindow(start, end);
  } catch (const std::logic_error&) {
    throw InvalidArgument("time window must look like start:end, got '" + text + "'");
  }
}

namespace {

// Guards ceil() against products such as 0.2 * 250 landing a hair above 50.
constexpr double kIndexSlack = 1e-9;

std::size_t clamp_index(double x, std::size_t n) {
  const double c = std::ceil(x - kIndexSlack);
  if (c <= 0.0) return 0;
  if (c >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(c);
}

}  // namespace

SampleRange window_samples(double t0, double fs, std::size_t n_samples, const TimeWindow& w) {
  const std::size_t first = clamp_index((w.start_s - t0) * fs, n_samples);
  const std::size_t last = clamp_index((w.end_s - t0) * fs, n_samples);
  return SampleRange{first, std::max(first, last)};
}

Tensor3::Tensor3(std::size_t n, std::size_t rows, std::size_t cols, std::vector<double> data)
    : n_(n), rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != n * rows * cols) {
    throw InvalidArgument("tensor data length does not match its dimensions");
  }
}

EpochSet::EpochSet(std::string subject_id, double fs, double t0, std::vector<TrialLabel> labels,
                   Tensor3 data)
    : subject_id_(std::move(subject_id)),
      fs_(fs),
      t0_(t0),
      labels_(std::move(labels)),
      data_(std::move(data)) {
  if (labels_.size() != data_.n()) {
    throw InvalidArgument("label count " + std::to_string(labels_.size()) +
                          " does not match trial count " + std::to_string(data_.n()));
  }
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw InvalidArgument("sampling rate must be > 0");
  if (!std::isfinite(t0_)) throw InvalidArgument("t0 must be finite");
  if (data_.rows() < 1) throw InvalidArgument("epoch set needs at least one channel");
  if (data_.cols() < 1) throw InvalidArgument("epoch set needs at least one sample");
  for (double v : data_.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("epoch data contains a non-finite value");
  }
}

EpochSet take_trials(const EpochSet& e, std::span<const std::size_t> indices) {
  Tensor3 out(indices.size(), e.n_channels(), e.n_samples());
  std::vector<TrialLabel> labels;
  labels.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::size_t i = indices[j];
    if (i >= e.n_trials()) throw InvalidArgument("trial index out of range");
    const auto src = e.trial(i);
    std::copy(src.begin(), src.end(), out.slab(j).begin());
    labels.push_back(e.labels()[i]);
  }
  return EpochSet(e.subject_id(), e.fs(), e.t0(), std::move(labels), std::move(out));
}

EpochSet select_trials(const EpochSet& e, const LabelFilter& keep) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    if (keep(e.labels()[i])) indices.push_back(i);
  }
  return take_trials(e, indices);
}

EpochSet crop(const EpochSet& e, const TimeWindow& w) {
  const SampleRange range = e.samples_in(w);
  if (range.empty()) {
    std::ostringstream msg;
    msg << "window [" << w.start_s << ", " << w.end_s << ") does not intersect epoch ["
        << e.t0() << ", " << e.end_time() << ")";
    throw InvalidArgument(msg.str());
  }
  Tensor3 out(e.n_trials(), e.n_channels(), range.size());
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      for (std::size_t s = 0; s < range.size(); ++s) {
        out(i, c, s) = e.data()(i, c, range.first + s);
      }
    }
  }
  return EpochSet(e.subject_id(), e.fs(), e.time_of(range.first), e.labels(), std::move(out));
}

LabelFilter topic_is(Topic topic) {
  return [topic](const TrialLabel& l) { return l.topic == topic; };
}

LabelFilter type_is(SentenceType type) {
  return [type](const TrialLabel& l) { return l.type == type; };
}

}  // namespace neuroboot
