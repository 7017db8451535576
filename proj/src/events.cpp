#include "ecnet/events.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ecnet/rng.hpp"

namespace ecnet {

namespace {

constexpr int32_t kNmnistSide = 34;

void sort_by_time(std::vector<RawEvent>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const RawEvent& a, const RawEvent& b) { return a.t < b.t; });
}

}  // namespace

EventStream parse_nmnist_bin(std::span<const uint8_t> bytes) {
  if (bytes.size() % 5 != 0)
    throw FormatError("nmnist: byte length " + std::to_string(bytes.size()) +
                      " is not a multiple of 5");
  EventStream s;
  s.sensor_width = kNmnistSide;
  s.sensor_height = kNmnistSide;
  s.events.reserve(bytes.size() / 5);
  for (size_t off = 0; off < bytes.size(); off += 5) {
    RawEvent e;
    e.x = bytes[off];
    e.y = bytes[off + 1];
    e.p = (bytes[off + 2] >> 7) & 1;
    e.t = (static_cast<int64_t>(bytes[off + 2] & 0x7f) << 16) |
          (static_cast<int64_t>(bytes[off + 3]) << 8) | static_cast<int64_t>(bytes[off + 4]);
    if (e.x >= kNmnistSide || e.y >= kNmnistSide)
      throw FormatError("nmnist: coordinate (" + std::to_string(e.x) + "," +
                        std::to_string(e.y) + ") outside the 34x34 sensor at record " +
                        std::to_string(off / 5));
    s.events.push_back(e);
  }
  sort_by_time(s.events);
  return s;
}

EventStream parse_text_events(std::string_view text, int32_t width, int32_t height) {
  EventStream s;
  std::istringstream in{std::string(text)};
  std::string line;
  int64_t line_no = 0;
  int32_t max_x = -1, max_y = -1;
  while (std::getline(in, line)) {
    ++line_no;
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long x, y, t, p;
    if (!(ls >> x >> y >> t >> p))
      throw FormatError("text events: line " + std::to_string(line_no) +
                        ": expected four integers, got \"" + line + "\"");
    std::string tail;
    if (ls >> tail)
      throw FormatError("text events: line " + std::to_string(line_no) +
                        ": trailing content \"" + tail + "\"");
    if (p != 0 && p != 1)
      throw FormatError("text events: line " + std::to_string(line_no) + ": polarity " +
                        std::to_string(p) + " out of range {0,1}");
    if (x < 0 || y < 0)
      throw FormatError("text events: line " + std::to_string(line_no) +
                        ": negative coordinate");
    if (t < 0)
      throw FormatError("text events: line " + std::to_string(line_no) +
                        ": negative timestamp");
    RawEvent e{static_cast<int32_t>(x), static_cast<int32_t>(y), t, static_cast<int32_t>(p)};
    max_x = std::max(max_x, e.x);
    max_y = std::max(max_y, e.y);
    s.events.push_back(e);
  }
  s.sensor_width = width > 0 ? width : max_x + 1;
  s.sensor_height = height > 0 ? height : max_y + 1;
  for (const RawEvent& e : s.events)
    if (e.x >= s.sensor_width || e.y >= s.sensor_height)
      throw FormatError("text events: coordinate (" + std::to_string(e.x) + "," +
                        std::to_string(e.y) + ") outside the " +
                        std::to_string(s.sensor_width) + "x" +
                        std::to_string(s.sensor_height) + " sensor");
  sort_by_time(s.events);
  return s;
}

std::string serialize_text_events(const EventStream& stream) {
  std::ostringstream out;
  for (const RawEvent& e : stream.events)
    out << e.x << ' ' << e.y << ' ' << e.t << ' ' << e.p << '\n';
  return out.str();
}

EventStream synth_rotating_dot(int class_id, int64_t n_events, uint64_t seed) {
  ECNET_CHECK(class_id == 0 || class_id == 1,
              "synth_rotating_dot: class_id must be 0 or 1");
  ECNET_CHECK(n_events > 0, "synth_rotating_dot: n_events must be positive");
  constexpr int32_t side = 34;
  constexpr int64_t duration_us = 300000;
  Rng rng(seed);

  double theta0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double revolutions = rng.uniform(1.0, 1.75);
  double cx = (side - 1) / 2.0, cy = (side - 1) / 2.0;
  double radius = rng.uniform(8.0, 11.0);

  // Base trajectory: positions and polarities indexed by path position j.
  // Class 0 walks the path forward in time, class 1 walks it backward, so the
  // (x, y, p) multiset is identical for both classes at a given seed.
  struct Pt {
    int32_t x, y, p;
  };
  std::vector<Pt> path(static_cast<size_t>(n_events));
  for (int64_t j = 0; j < n_events; ++j) {
    double frac = static_cast<double>(j) / static_cast<double>(n_events);
    double ang = theta0 + 2.0 * std::numbers::pi * revolutions * frac;
    double r = radius + rng.normal(0.0, 0.8);
    double px = cx + r * std::cos(ang) + rng.normal(0.0, 0.4);
    double py = cy + r * std::sin(ang) + rng.normal(0.0, 0.4);
    Pt pt;
    pt.x = static_cast<int32_t>(std::clamp(std::lround(px), 0l, long(side - 1)));
    pt.y = static_cast<int32_t>(std::clamp(std::lround(py), 0l, long(side - 1)));
    pt.p = static_cast<int32_t>(j & 1);
    path[static_cast<size_t>(j)] = pt;
  }

  std::vector<int64_t> times(static_cast<size_t>(n_events));
  double spacing = static_cast<double>(duration_us) / static_cast<double>(n_events);
  for (int64_t k = 0; k < n_events; ++k)
    times[static_cast<size_t>(k)] =
        static_cast<int64_t>(static_cast<double>(k) * spacing + rng.uniform01() * spacing * 0.9);

  EventStream s;
  s.sensor_width = side;
  s.sensor_height = side;
  s.events.resize(static_cast<size_t>(n_events));
  for (int64_t k = 0; k < n_events; ++k) {
    int64_t j = class_id == 0 ? k : n_events - 1 - k;
    const Pt& pt = path[static_cast<size_t>(j)];
    s.events[static_cast<size_t>(k)] = RawEvent{pt.x, pt.y, times[static_cast<size_t>(k)], pt.p};
  }
  return s;
}

std::vector<EventStream> slide_windows(const EventStream& stream, const WindowSpec& spec) {
  ECNET_CHECK(spec.window_ms > 0 && spec.stride_ms > 0,
              "slide_windows: window and stride must be positive");
  std::vector<EventStream> out;
  if (stream.empty()) return out;
  const int64_t win = spec.window_ms * 1000;
  const int64_t stride = spec.stride_ms * 1000;
  const int64_t t0 = stream.events.front().t;
  const int64_t span = stream.duration_us();
  for (int64_t k = 0;; ++k) {
    int64_t start = k * stride;
    if (k > 0 && start + win > span) break;
    auto lo = std::lower_bound(stream.events.begin(), stream.events.end(), t0 + start,
                               [](const RawEvent& e, int64_t v) { return e.t < v; });
    auto hi = std::lower_bound(lo, stream.events.end(), t0 + start + win,
                               [](const RawEvent& e, int64_t v) { return e.t < v; });
    if (lo != hi) {
      EventStream w;
      w.sensor_width = stream.sensor_width;
      w.sensor_height = stream.sensor_height;
      w.events.assign(lo, hi);
      out.push_back(std::move(w));
    }
    if (start + win > span) break;  // the always-emitted first window was the last fit
  }
  return out;
}

EventCloud sample_event_cloud(const EventStream& window, int64_t t_points) {
  ECNET_CHECK(t_points > 0, "sample_event_cloud: point count must be positive");
  ECNET_CHECK(!window.empty(), "sample_event_cloud: empty window");
  const int64_t n = window.size();

  std::vector<int64_t> idx;
  idx.reserve(static_cast<size_t>(t_points));
  if (n >= t_points) {
    int64_t stride = n / t_points;
    for (int64_t j = 0; j < t_points; ++j) idx.push_back(j * stride);
  } else {
    // repeat events in place so chronological order survives padding
    int64_t q = t_points / n, r = t_points % n;
    for (int64_t i = 0; i < n; ++i) {
      int64_t reps = q + (i < r ? 1 : 0);
      for (int64_t c = 0; c < reps; ++c) idx.push_back(i);
    }
  }

  EventCloud cloud;
  cloud.length = t_points;
  cloud.sensor_width = window.sensor_width;
  cloud.sensor_height = window.sensor_height;
  cloud.t_min = window.events.front().t;
  cloud.t_max = window.events.back().t;
  cloud.coords = Tensor({t_points, 4});
  const double sx = window.sensor_width > 1 ? 1.0 / (window.sensor_width - 1) : 0.0;
  const double sy = window.sensor_height > 1 ? 1.0 / (window.sensor_height - 1) : 0.0;
  const int64_t t_span = cloud.t_max - cloud.t_min;
  const double st = t_span > 0 ? 1.0 / static_cast<double>(t_span) : 0.0;
  for (int64_t j = 0; j < t_points; ++j) {
    const RawEvent& e = window.events[static_cast<size_t>(idx[static_cast<size_t>(j)])];
    cloud.coords.at(j, 0) = e.x * sx;
    cloud.coords.at(j, 1) = e.y * sy;
    cloud.coords.at(j, 2) = static_cast<double>(e.t - cloud.t_min) * st;
    cloud.coords.at(j, 3) = e.p * 2.0 - 1.0;
  }
  return cloud;
}

RawEvent denormalize_row(const EventCloud& cloud, int64_t row) {
  ECNET_CHECK(row >= 0 && row < cloud.length, "denormalize_row: row out of range");
  RawEvent e;
  e.x = static_cast<int32_t>(std::lround(cloud.coords.at(row, 0) * (cloud.sensor_width - 1)));
  e.y = static_cast<int32_t>(std::lround(cloud.coords.at(row, 1) * (cloud.sensor_height - 1)));
  e.t = static_cast<int64_t>(
            std::llround(cloud.coords.at(row, 2) * static_cast<double>(cloud.t_max - cloud.t_min))) +
        cloud.t_min;
  e.p = cloud.coords.at(row, 3) > 0.0 ? 1 : 0;
  return e;
}

}  // namespace ecnet
