#include "neuroboot/epoch_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>

namespace neuroboot {

namespace {

using json = nlohmann::json;
using Kind = EpochFileError::Kind;

constexpr std::array<char, 4> kMagic = {'E', 'P', 'B', '1'};
constexpr std::uint32_t kMaxHeaderBytes = 64u << 20;

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw EpochFileError(Kind::MalformedHeader, "truncated header length");
  }
  return to_little(v);
}

template <typename T>
T header_field(const json& header, const char* name) {
  if (!header.contains(name)) {
    throw EpochFileError(Kind::MalformedHeader, std::string("header is missing '") + name + "'");
  }
  try {
    return header.at(name).get<T>();
  } catch (const json::exception&) {
    throw EpochFileError(Kind::MalformedHeader, std::string("header field '") + name +
                                                    "' has the wrong type");
  }
}

}  // namespace

void write_epochs(const EpochSet& e, std::ostream& out) {
  json header;
  header["subject_id"] = e.subject_id();
  header["n_trials"] = e.n_trials();
  header["n_channels"] = e.n_channels();
  header["n_samples"] = e.n_samples();
  header["fs"] = e.fs();
  header["t0"] = e.t0();
  std::vector<int> codes;
  codes.reserve(e.n_trials());
  for (const auto& l : e.labels()) codes.push_back(label_code(l));
  header["label_codes"] = codes;

  const std::string text = header.dump();
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  std::vector<std::uint32_t> buffer(e.data().values().size());
  std::size_t i = 0;
  for (double v : e.data().values()) {
    buffer[i++] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(std::uint32_t)));
  if (!out) throw EpochFileError(Kind::Io, "failed writing epoch data");
}

void save_epochs(const EpochSet& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EpochFileError(Kind::Io, "cannot open " + path.string() + " for writing");
  write_epochs(e, out);
}

EpochSet read_epochs(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw EpochFileError(Kind::MalformedHeader, "missing EPB1 magic");
  }
  const std::uint32_t header_len = read_u32(in);
  if (header_len == 0 || header_len > kMaxHeaderBytes) {
    throw EpochFileError(Kind::MalformedHeader, "implausible header length");
  }
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) {
    throw EpochFileError(Kind::MalformedHeader, "truncated header");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& err) {
    throw EpochFileError(Kind::MalformedHeader, std::string("header is not valid JSON: ") +
                                                    err.what());
  }
  if (!header.is_object()) throw EpochFileError(Kind::MalformedHeader, "header is not an object");

  const auto subject = header_field<std::string>(header, "subject_id");
  const auto n_trials = header_field<std::size_t>(header, "n_trials");
  const auto n_channels = header_field<std::size_t>(header, "n_channels");
  const auto n_samples = header_field<std::size_t>(header, "n_samples");
  const auto fs = header_field<double>(header, "fs");
  const auto t0 = header_field<double>(header, "t0");
  const auto codes = header_field<std::vector<int>>(header, "label_codes");

  if (codes.size() != n_trials) {
    throw EpochFileError(Kind::DimensionMismatch,
                         "label_codes has " + std::to_string(codes.size()) + " entries but n_trials is " +
                             std::to_string(n_trials));
  }
  if (n_channels == 0 || n_samples == 0) {
    throw EpochFileError(Kind::DimensionMismatch, "n_channels and n_samples must be >= 1");
  }
  if (!(fs > 0.0)) throw EpochFileError(Kind::MalformedHeader, "fs must be > 0");

  std::vector<TrialLabel> labels;
  labels.reserve(codes.size());
  for (int code : codes) {
    if (code < 0 || code > 3) {
      throw EpochFileError(Kind::UnknownLabel, "unknown label code " + std::to_string(code));
    }
    labels.push_back(label_from_code(static_cast<std::uint8_t>(code)));
  }

  const std::size_t count = n_trials * n_channels * n_samples;
  if (n_channels != 0 && n_samples != 0 && count / n_channels / n_samples != n_trials) {
    throw EpochFileError(Kind::DimensionMismatch, "tensor dimensions overflow");
  }
  std::vector<std::uint32_t> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint32_t)) {
    throw EpochFileError(Kind::DimensionMismatch, "file holds fewer samples than the header declares");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw EpochFileError(Kind::DimensionMismatch, "file holds more samples than the header declares");
  }

  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(to_little(raw[i]));
    if (!std::isfinite(f)) {
      throw EpochFileError(Kind::NonFiniteValue,
                           "non-finite value at flat index " + std::to_string(i));
    }
    values[i] = f;
  }
  return EpochSet(subject, fs, t0, std::move(labels),
                  Tensor3(n_trials, n_channels, n_samples, std::move(values)));
}

EpochSet load_epochs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EpochFileError(Kind::Io, "cannot open " + path.string());
  return read_epochs(in);
}

void write_epochs_csv(const EpochSet& e, std::ostream& out) {
  out << "trial,label_code,topic,type,channel";
  for (std::size_t s = 0; s < e.n_samples(); ++s) out << ",s" << s;
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    const auto& l = e.labels()[i];
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      out << i << ',' << int(label_code(l)) << ',' << to_string(l.topic) << ','
          << to_string(l.type) << ',' << c;
      for (std::size_t s = 0; s < e.n_samples(); ++s) out << ',' << e.data()(i, c, s);
      out << '\n';
    }
  }
}

std::vector<std::filesystem::path> list_epoch_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw EpochFileError(Kind::Io, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == kEpochFileExtension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<EpochSet> load_epoch_directory(const std::filesystem::path& dir) {
  std::vector<EpochSet> sets;
  for (const auto& p : list_epoch_files(dir)) sets.push_back(load_epochs(p));
  return sets;
}

}  // namespace neuroboot
