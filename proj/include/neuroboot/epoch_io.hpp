#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "neuroboot/core.hpp"

namespace neuroboot {

/// EPB1 layout: magic "EPB1", u32 little-endian header length, UTF-8 JSON
/// header {subject_id, n_trials, n_channels, n_samples, fs, t0, label_codes},
/// then n_trials·n_channels·n_samples little-endian float32 values,
/// trial-major, channel-major, sample-major.
class EpochFileError : public Error {
 public:
  enum class Kind { Io, MalformedHeader, DimensionMismatch, NonFiniteValue, UnknownLabel };

  EpochFileError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr const char* kEpochFileExtension = ".epb";

/// Values are stored as float32, so doubles that are not exactly
/// representable are rounded on save.
void save_epochs(const EpochSet& e, const std::filesystem::path& path);
void write_epochs(const EpochSet& e, std::ostream& out);

EpochSet load_epochs(const std::filesystem::path& path);
EpochSet read_epochs(std::istream& in);

/// One row per trial × channel: trial, label_code, topic, type, channel, s0..sN.
void write_epochs_csv(const EpochSet& e, std::ostream& out);

/// Sorted list of *.epb files in a directory.
std::vector<std::filesystem::path> list_epoch_files(const std::filesystem::path& dir);
std::vector<EpochSet> load_epoch_directory(const std::filesystem::path& dir);

}  // namespace neuroboot
