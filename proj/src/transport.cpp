#include "scenemap/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace scenemap {

void ChannelConfig::validate() const {
  if (!(rate_bps > 0.0)) throw std::invalid_argument("channel rate must be > 0");
  if (per_packet_overhead < 0 || packet_size <= per_packet_overhead)
    throw std::invalid_argument("packet_size must exceed per_packet_overhead >= 0");
  if (!(tick > 0.0)) throw std::invalid_argument("channel tick must be > 0");
}

Channel::Channel(ChannelConfig cfg, bool supersede) : cfg_(cfg), supersede_(supersede) {
  cfg_.validate();
}

uint64_t Channel::enqueue(std::span<const uint8_t> payload, double t_now, int32_t stream) {
  if (payload.empty()) throw std::invalid_argument("empty payload rejected");
  std::lock_guard lk(mu_);

  if (supersede_) {
    // drop queued-but-unsent older payloads of this stream
    for (auto it = queue_.begin(); it != queue_.end();) {
      Transmission& tr = log_[*it];
      const bool unsent = it != queue_.begin() || head_sent_bytes_ == 0.0;
      if (tr.stream == stream && unsent) {
        tr.superseded = true;
        it = queue_.erase(it);
      } else {
        ++it;
      }
    }
  }

  const size_t chunk = static_cast<size_t>(cfg_.packet_size - cfg_.per_packet_overhead);
  Transmission tr;
  tr.id = log_.size();
  tr.stream = stream;
  tr.enqueue_time = t_now;
  tr.payload_bytes = payload.size();
  tr.packets = static_cast<int32_t>((payload.size() + chunk - 1) / chunk);
  tr.wire_bytes = payload.size() + static_cast<size_t>(tr.packets) * cfg_.per_packet_overhead;
  log_.push_back(tr);
  queue_.push_back(tr.id);
  return tr.id;
}

std::vector<uint64_t> Channel::step(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step dt must be > 0");
  std::lock_guard lk(mu_);
  std::vector<uint64_t> delivered;
  double t = now_;
  const double end = now_ + dt;
  while (!queue_.empty()) {
    Transmission& tr = log_[queue_.front()];
    if (tr.enqueue_time > t) {
      if (tr.enqueue_time >= end) break;
      t = tr.enqueue_time;  // idle until the payload exists
    }
    const double remaining = static_cast<double>(tr.wire_bytes) - head_sent_bytes_;
    const double needed = remaining * 8.0 / cfg_.rate_bps;
    if (t + needed <= end) {
      t += needed;
      tr.delivery_time = t;
      delivered.push_back(tr.id);
      queue_.pop_front();
      head_sent_bytes_ = 0.0;
    } else {
      head_sent_bytes_ += (end - t) * cfg_.rate_bps / 8.0;
      t = end;
      break;
    }
  }
  now_ = end;
  return delivered;
}

std::vector<uint64_t> Channel::drain() {
  std::vector<uint64_t> delivered;
  while (true) {
    {
      std::lock_guard lk(mu_);
      if (queue_.empty()) break;
    }
    auto batch = step(3600.0);
    delivered.insert(delivered.end(), batch.begin(), batch.end());
  }
  return delivered;
}

std::string Channel::delivery_log_csv() const {
  std::lock_guard lk(mu_);
  std::ostringstream out;
  out << "id,stream,payload_bytes,packets,enqueue_time,delivery_time,superseded\n";
  char buf[64];
  for (const Transmission& tr : log_) {
    out << tr.id << ',' << tr.stream << ',' << tr.payload_bytes << ',' << tr.packets << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", tr.enqueue_time);
    out << buf << ',';
    if (tr.delivery_time) {
      std::snprintf(buf, sizeof(buf), "%.10g", *tr.delivery_time);
      out << buf;
    }
    out << ',' << (tr.superseded ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace scenemap
