#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scenemap {

struct ChannelConfig {
  double rate_bps = 10000.0;     // peak acoustic-link throughput
  int32_t packet_size = 256;     // bytes on the wire per full packet
  int32_t per_packet_overhead = 16;  // framing bytes per packet
  double tick = 0.1;             // seconds, replay step granularity

  void validate() const;
};

struct Transmission {
  uint64_t id = 0;
  int32_t stream = 0;
  double enqueue_time = 0.0;
  size_t payload_bytes = 0;
  int32_t packets = 0;
  size_t wire_bytes = 0;  // payload + per-packet overhead; the final packet may be short
  std::optional<double> delivery_time;
  bool superseded = false;
};

// Rate-limited FIFO channel with a simulated clock. When supersede mode is on
// (default), enqueueing a payload drops queued-but-unsent older payloads of
// the same stream, so the operator always gets the freshest map.
class Channel {
 public:
  explicit Channel(ChannelConfig cfg, bool supersede = true);

  uint64_t enqueue(std::span<const uint8_t> payload, double t_now, int32_t stream = 0);

  // Advances simulated time by dt; returns ids delivered in this window.
  std::vector<uint64_t> step(double dt);

  // Runs the clock until the queue drains; returns ids delivered.
  std::vector<uint64_t> drain();

  double now() const { return now_; }
  size_t queued() const { return queue_.size(); }
  const std::vector<Transmission>& log() const { return log_; }
  const Transmission& record(uint64_t id) const { return log_.at(id); }

  std::string delivery_log_csv() const;

 private:
  ChannelConfig cfg_;
  bool supersede_;
  double now_ = 0.0;
  double head_sent_bytes_ = 0.0;  // progress into the queue head
  std::deque<uint64_t> queue_;
  std::vector<Transmission> log_;
  mutable std::mutex mu_;  // enqueue and step may come from different threads
};

}  // namespace scenemap
