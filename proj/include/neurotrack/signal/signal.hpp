#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"

namespace neurotrack {

// Sampled multichannel time series (channels x samples, row-major).
// Carries EEG, audio, or feature streams.
class MultichannelSignal {
 public:
  MultichannelSignal() = default;

  MultichannelSignal(std::size_t channels, std::size_t samples, double fs)
      : channels_(channels), samples_(samples), fs_(fs),
        data_(channels * samples, 0.0) {
    detail::require(fs > 0.0, "MultichannelSignal: fs must be > 0");
  }

  MultichannelSignal(std::vector<double> data, std::size_t channels, double fs)
      : channels_(channels), fs_(fs), data_(std::move(data)) {
    detail::require(fs > 0.0, "MultichannelSignal: fs must be > 0");
    detail::require(channels > 0, "MultichannelSignal: need >= 1 channel");
    detail::require(data_.size() % channels == 0,
                    "MultichannelSignal: data size not divisible by channels");
    samples_ = data_.size() / channels;
  }

  static MultichannelSignal mono(std::vector<double> samples, double fs) {
    return MultichannelSignal(std::move(samples), 1, fs);
  }

  std::size_t channels() const { return channels_; }
  std::size_t samples() const { return samples_; }
  double fs() const { return fs_; }
  double duration_s() const {
    return fs_ > 0.0 ? static_cast<double>(samples_) / fs_ : 0.0;
  }

  double& at(std::size_t ch, std::size_t t) { return data_[ch * samples_ + t]; }
  double at(std::size_t ch, std::size_t t) const { return data_[ch * samples_ + t]; }

  std::span<double> channel(std::size_t ch) {
    return {data_.data() + ch * samples_, samples_};
  }
  std::span<const double> channel(std::size_t ch) const {
    return {data_.data() + ch * samples_, samples_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::vector<std::string>& channel_labels() { return labels_; }
  const std::vector<std::string>& channel_labels() const { return labels_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void truncate(std::size_t samples) {
    if (samples >= samples_) return;
    std::vector<double> out(channels_ * samples);
    for (std::size_t c = 0; c < channels_; ++c) {
      const double* src = data_.data() + c * samples_;
      std::copy(src, src + samples, out.data() + c * samples);
    }
    data_ = std::move(out);
    samples_ = samples;
  }

 private:
  std::size_t channels_ = 0;
  std::size_t samples_ = 0;
  double fs_ = 0.0;
  std::vector<double> data_;
  std::vector<std::string> labels_;
};

}  // namespace neurotrack
