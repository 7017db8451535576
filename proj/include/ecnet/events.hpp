#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecnet/tensor.hpp"

namespace ecnet {

// One camera event: pixel position, microsecond timestamp, polarity bit.
struct RawEvent {
  int32_t x = 0;
  int32_t y = 0;
  int64_t t = 0;
  int32_t p = 0;
};

// Chronologically ordered event sequence from one sensor.
struct EventStream {
  std::vector<RawEvent> events;
  int32_t sensor_width = 0;
  int32_t sensor_height = 0;

  int64_t size() const { return static_cast<int64_t>(events.size()); }
  bool empty() const { return events.empty(); }
  int64_t duration_us() const {
    return events.empty() ? 0 : events.back().t - events.front().t;
  }
};

// Fixed-length, normalized, order-preserving subsample of a stream window.
// coords is [T,4] with columns (x, y, t, p); x, y, t in [0,1], p in {-1,+1}.
// The normalization context is kept so rows can be mapped back to pixels.
struct EventCloud {
  Tensor coords;
  int64_t length = 0;
  int32_t sensor_width = 0;
  int32_t sensor_height = 0;
  int64_t t_min = 0;
  int64_t t_max = 0;
};

struct WindowSpec {
  int64_t window_ms = 0;
  int64_t stride_ms = 0;
  int64_t points = 0;
};

// N-MNIST .bin: 5-byte big-endian records, x:8 y:8 p:1 t:23, 34x34 sensor.
EventStream parse_nmnist_bin(std::span<const uint8_t> bytes);

// One event per line "x y t p"; '#' lines are comments; stable-sorted by t.
// Sensor dims are inferred from the data when width/height are zero.
EventStream parse_text_events(std::string_view text, int32_t width = 0, int32_t height = 0);
std::string serialize_text_events(const EventStream& stream);

// Deterministic two-class surrogate: a jittered dot orbiting the sensor
// center, class 0 clockwise and class 1 counterclockwise. Both classes with
// the same seed emit the identical multiset of (x, y, p); only the temporal
// order differs.
EventStream synth_rotating_dot(int class_id, int64_t n_events, uint64_t seed);

// Windows cover [t0 + k*stride, t0 + k*stride + window); the first window is
// always emitted for a non-empty stream, later ones while they fit inside the
// stream span. Empty windows are dropped.
std::vector<EventStream> slide_windows(const EventStream& stream, const WindowSpec& spec);

// Order-preserving subsample to exactly T rows (uniform stride when the
// window is long, in-place repetition when short), then normalization.
EventCloud sample_event_cloud(const EventStream& window, int64_t t_points);

// Maps one cloud row back to integer event coordinates.
RawEvent denormalize_row(const EventCloud& cloud, int64_t row);

}  // namespace ecnet
