#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/signal/signal.hpp"

namespace neurotrack {

// Self-describing binary signal container.
//
// Layout (little-endian):
//   bytes  0..7   magic "NTRKSIG\0"
//   bytes  8..11  format version (u32, currently 1)
//   bytes 12..15  reserved (zero)
//   fs          f64
//   n_channels  u32
//   n_samples   u64
//   samples     row-major f64, channel-major (channel 0 first)

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "signal container I/O assumes a little-endian host");

inline constexpr char kSignalMagic[8] = {'N', 'T', 'R', 'K', 'S', 'I', 'G', '\0'};
inline constexpr std::uint32_t kSignalVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  ensure(static_cast<bool>(in), "signal container: truncated file");
  return v;
}

}  // namespace detail

inline void write_signal(const MultichannelSignal& sig, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  detail::ensure(out.is_open(), "cannot open for writing: " + path.string());
  out.write(detail::kSignalMagic, 8);
  detail::write_raw(out, detail::kSignalVersion);
  detail::write_raw(out, std::uint32_t{0});
  detail::write_raw(out, sig.fs());
  detail::write_raw(out, static_cast<std::uint32_t>(sig.channels()));
  detail::write_raw(out, static_cast<std::uint64_t>(sig.samples()));
  out.write(reinterpret_cast<const char*>(sig.data().data()),
            static_cast<std::streamsize>(sig.data().size() * sizeof(double)));
  detail::ensure(static_cast<bool>(out), "write failed: " + path.string());
}

inline MultichannelSignal read_signal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::ensure(in.is_open(), "cannot open for reading: " + path.string());
  char magic[8];
  in.read(magic, 8);
  detail::ensure(static_cast<bool>(in) && std::memcmp(magic, detail::kSignalMagic, 8) == 0,
                 "not a signal container: " + path.string());
  const auto version = detail::read_raw<std::uint32_t>(in);
  detail::ensure(version == detail::kSignalVersion,
                 "unsupported container version in " + path.string());
  detail::read_raw<std::uint32_t>(in);  // reserved
  const double fs = detail::read_raw<double>(in);
  const auto channels = detail::read_raw<std::uint32_t>(in);
  const auto samples = detail::read_raw<std::uint64_t>(in);
  detail::ensure(fs > 0.0 && channels > 0, "corrupt container header: " + path.string());
  std::vector<double> data(static_cast<std::size_t>(channels) * samples);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  detail::ensure(static_cast<bool>(in), "truncated container: " + path.string());
  return MultichannelSignal(std::move(data), channels, fs);
}

// CSV interop: header row, first column time in seconds, one column per channel.
inline void export_signal_csv(const MultichannelSignal& sig, const std::filesystem::path& path) {
  std::ofstream out(path);
  detail::ensure(out.is_open(), "cannot open for writing: " + path.string());
  out << "time_s";
  for (std::size_t c = 0; c < sig.channels(); ++c) {
    if (c < sig.channel_labels().size()) {
      out << ',' << sig.channel_labels()[c];
    } else {
      out << ",ch" << c;
    }
  }
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t t = 0; t < sig.samples(); ++t) {
    out << static_cast<double>(t) / sig.fs();
    for (std::size_t c = 0; c < sig.channels(); ++c) out << ',' << sig.at(c, t);
    out << '\n';
  }
  detail::ensure(static_cast<bool>(out), "write failed: " + path.string());
}

inline MultichannelSignal import_signal_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  detail::ensure(in.is_open(), "cannot open for reading: " + path.string());
  std::string line;
  detail::ensure(static_cast<bool>(std::getline(in, line)), "empty CSV: " + path.string());
  std::vector<std::string> labels;
  {
    std::stringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, ',')) {
      if (!first) labels.push_back(cell);
      first = false;
    }
  }
  detail::ensure(!labels.empty(), "CSV has no channel columns: " + path.string());
  const std::size_t channels = labels.size();
  std::vector<double> times;
  std::vector<std::vector<double>> cols(channels);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    detail::ensure(static_cast<bool>(std::getline(row, cell, ',')), "bad CSV row");
    times.push_back(std::stod(cell));
    for (std::size_t c = 0; c < channels; ++c) {
      detail::ensure(static_cast<bool>(std::getline(row, cell, ',')),
                     "CSV row with missing channel value");
      cols[c].push_back(std::stod(cell));
    }
  }
  detail::ensure(times.size() >= 2, "CSV needs >= 2 rows to infer fs");
  const double dt = times[1] - times[0];
  detail::ensure(dt > 0.0, "CSV time column not increasing");
  const std::size_t samples = times.size();
  std::vector<double> data(channels * samples);
  for (std::size_t c = 0; c < channels; ++c) {
    std::copy(cols[c].begin(), cols[c].end(), data.begin() + c * samples);
  }
  MultichannelSignal sig(std::move(data), channels, 1.0 / dt);
  sig.channel_labels() = std::move(labels);
  return sig;
}

}  // namespace neurotrack
