// Copyright 2026 The fcsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FCSENSE__TELEMETRY_HPP_
#define FCSENSE__TELEMETRY_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fcsense/error.hpp"
#include "fcsense/sensor_model.hpp"

namespace fcsense
{

// Wire layout, little-endian:
//
//   offset  size  field
//        0     4  magic "FCS1"
//        4     2  sequence (wraps at 65536)
//        6     4  timestamp, ms
//       10    16  8 x channel ADC count (0..1023)
//       26     2  checksum = sum of bytes [0, 26) mod 65536
inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'F', 'C', 'S', '1'};
inline constexpr std::size_t kFrameChannels = 8;
inline constexpr std::size_t kFrameSize = 4 + 2 + 4 + 2 * kFrameChannels + 2;
inline constexpr std::uint16_t kMaxChannelCount = 1023;
inline constexpr int kFrameAdcBits = 10;

struct TelemetryFrame
{
  std::uint16_t sequence = 0;
  std::uint32_t timestamp_ms = 0;
  std::array<std::uint16_t, kFrameChannels> channels{};

  double voltage(std::size_t channel) const
  {
    return from_adc_count(channels.at(channel), kFrameAdcBits);
  }

  bool operator==(const TelemetryFrame &) const = default;
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

inline std::uint16_t frame_checksum(std::span<const std::uint8_t> bytes)
{
  std::uint32_t sum = 0;
  for (auto b : bytes) {sum += b;}
  return static_cast<std::uint16_t>(sum & 0xFFFFu);
}

namespace detail
{

template<typename T>
void put_le(std::uint8_t * dst, T value)
{
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<std::uint8_t>((value >> (8 * i)) & 0xFFu);
  }
}

template<typename T>
T get_le(const std::uint8_t * src)
{
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v = static_cast<T>(v | (static_cast<T>(src[i]) << (8 * i)));
  }
  return v;
}

}  // namespace detail

inline FrameBytes encode_frame(const TelemetryFrame & frame)
{
  FrameBytes out{};
  std::copy(kFrameMagic.begin(), kFrameMagic.end(), out.begin());
  detail::put_le<std::uint16_t>(out.data() + 4, frame.sequence);
  detail::put_le<std::uint32_t>(out.data() + 6, frame.timestamp_ms);
  for (std::size_t c = 0; c < kFrameChannels; ++c) {
    if (frame.channels[c] > kMaxChannelCount) {
      throw Error(ErrorKind::Domain, "channel count exceeds 10-bit range");
    }
    detail::put_le<std::uint16_t>(out.data() + 10 + 2 * c, frame.channels[c]);
  }
  const auto sum = frame_checksum(std::span<const std::uint8_t>(out.data(), kFrameSize - 2));
  detail::put_le<std::uint16_t>(out.data() + kFrameSize - 2, sum);
  return out;
}

enum class DecodeStatus { Ok, NeedMoreBytes, ResyncNeeded, CorruptFrame };

struct DecodeResult
{
  DecodeStatus status = DecodeStatus::NeedMoreBytes;
  TelemetryFrame frame{};

  explicit operator bool() const {return status == DecodeStatus::Ok;}
};

/// Decodes one frame from the front of `bytes`.
inline DecodeResult decode_frame(std::span<const std::uint8_t> bytes)
{
  DecodeResult r;
  const std::size_t magic_len = std::min(bytes.size(), kFrameMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len), kFrameMagic.begin())) {
    r.status = DecodeStatus::ResyncNeeded;
    return r;
  }
  if (bytes.size() < kFrameSize) {
    r.status = DecodeStatus::NeedMoreBytes;
    return r;
  }
  const std::uint8_t * p = bytes.data();
  const auto expected = detail::get_le<std::uint16_t>(p + kFrameSize - 2);
  if (frame_checksum(bytes.first(kFrameSize - 2)) != expected) {
    r.status = DecodeStatus::CorruptFrame;
    return r;
  }
  r.frame.sequence = detail::get_le<std::uint16_t>(p + 4);
  r.frame.timestamp_ms = detail::get_le<std::uint32_t>(p + 6);
  for (std::size_t c = 0; c < kFrameChannels; ++c) {
    r.frame.channels[c] = detail::get_le<std::uint16_t>(p + 10 + 2 * c);
    if (r.frame.channels[c] > kMaxChannelCount) {
      r.status = DecodeStatus::CorruptFrame;
      return r;
    }
  }
  r.status = DecodeStatus::Ok;
  return r;
}

struct SequenceGap
{
  std::uint16_t previous = 0;
  std::uint16_t next = 0;
  std::uint16_t missing = 0;

  bool operator==(const SequenceGap &) const = default;
};

struct StreamStats
{
  std::size_t frames = 0;
  std::size_t skipped_bytes = 0;
  std::size_t corrupt_frames = 0;
  std::size_t missing_frames = 0;
  std::size_t out_of_order = 0;
  std::vector<SequenceGap> gaps;

  bool operator==(const StreamStats &) const = default;
};

/// Incremental frame extractor. Bytes may arrive in arbitrary chunks; the
/// frames and statistics produced do not depend on how the stream is split.
class FrameParser
{
public:
  /// Consumes `bytes`, appending every complete valid frame to `out`.
  void feed(std::span<const std::uint8_t> bytes, std::vector<TelemetryFrame> & out)
  {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    while (buffer_.size() - head_ >= kFrameMagic.size()) {
      const auto view = std::span<const std::uint8_t>(buffer_).subspan(head_);
      const DecodeResult r = decode_frame(view);
      if (r.status == DecodeStatus::NeedMoreBytes) {
        break;
      }
      if (r.status == DecodeStatus::Ok) {
        accept(r.frame, out);
        head_ += kFrameSize;
        continue;
      }
      if (r.status == DecodeStatus::CorruptFrame) {
        ++stats_.corrupt_frames;
      }
      ++stats_.skipped_bytes;
      ++head_;
    }
    compact();
  }

  /// End of stream: whatever is left cannot form a frame.
  void finish()
  {
    stats_.skipped_bytes += buffer_.size() - head_;
    buffer_.clear();
    head_ = 0;
  }

  const StreamStats & stats() const {return stats_;}

private:
  void accept(const TelemetryFrame & f, std::vector<TelemetryFrame> & out)
  {
    if (last_sequence_) {
      const auto missing = static_cast<std::uint16_t>(f.sequence - *last_sequence_ - 1u);
      if (missing != 0) {
        if (missing < 0x8000u) {
          stats_.gaps.push_back({*last_sequence_, f.sequence, missing});
          stats_.missing_frames += missing;
        } else {
          ++stats_.out_of_order;
        }
      }
    }
    last_sequence_ = f.sequence;
    ++stats_.frames;
    out.push_back(f);
  }

  void compact()
  {
    if (head_ > 4096 || head_ == buffer_.size()) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  std::vector<std::uint8_t> buffer_;
  std::size_t head_ = 0;
  std::optional<std::uint16_t> last_sequence_;
  StreamStats stats_;
};

/// Parses a complete byte stream.
inline std::vector<TelemetryFrame> resync_stream(
  std::span<const std::uint8_t> bytes, StreamStats * stats = nullptr)
{
  FrameParser parser;
  std::vector<TelemetryFrame> frames;
  parser.feed(bytes, frames);
  parser.finish();
  if (stats != nullptr) {
    *stats = parser.stats();
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Filtering

template<std::size_t N>
struct TimedSample
{
  double timestamp_ms = 0.0;
  std::array<double, N> values{};
};

template<std::size_t N>
struct FilteredSample
{
  double timestamp_ms = 0.0;
  std::array<double, N> filtered{};
  /// V/s
  std::array<double, N> derivative{};
};

/// Centered moving average of `window` samples (truncated at the stream
/// edges) followed by a central finite difference of the filtered values.
template<std::size_t N>
std::vector<FilteredSample<N>> filter_and_differentiate(
  std::span<const TimedSample<N>> samples, std::size_t window)
{
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorKind::Domain, "filter window must be odd and >= 1");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].timestamp_ms > samples[i - 1].timestamp_ms)) {
      throw Error(ErrorKind::Stream, "timestamps must be strictly increasing");
    }
  }
  const std::size_t n = samples.size();
  const std::size_t half = window / 2;
  std::vector<FilteredSample<N>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    out[i].timestamp_ms = samples[i].timestamp_ms;
    for (std::size_t c = 0; c < N; ++c) {
      // Offsets from the first value keep constant runs exact.
      const double ref = samples[lo].values[c];
      double acc = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) {acc += samples[j].values[c] - ref;}
      out[i].filtered[c] = ref + acc / static_cast<double>(hi - lo + 1);
    }
  }
  if (n < 2) {
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? i : i + 1;
    const double dt_s = (out[b].timestamp_ms - out[a].timestamp_ms) / 1000.0;
    for (std::size_t c = 0; c < N; ++c) {
      out[i].derivative[c] = (out[b].filtered[c] - out[a].filtered[c]) / dt_s;
    }
  }
  return out;
}

inline std::vector<TimedSample<kFrameChannels>> frames_to_samples(std::span<const TelemetryFrame> frames)
{
  std::vector<TimedSample<kFrameChannels>> out;
  out.reserve(frames.size());
  for (const auto & f : frames) {
    TimedSample<kFrameChannels> s;
    s.timestamp_ms = f.timestamp_ms;
    for (std::size_t c = 0; c < kFrameChannels; ++c) {s.values[c] = f.voltage(c);}
    out.push_back(s);
  }
  return out;
}

}  // namespace fcsense

#endif  // FCSENSE__TELEMETRY_HPP_
