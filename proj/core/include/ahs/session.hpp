#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ahs/acquisition.hpp"
#include "ahs/detect.hpp"
#include "ahs/evaluation.hpp"
#include "ahs/mlp.hpp"
#include "ahs/optimizer.hpp"
#include "ahs/packets.hpp"
#include "ahs/synth.hpp"

namespace ahs {

// Ordered lossless byte pipe between the server and headstage halves.
class ByteChannel {
public:
    virtual ~ByteChannel() = default;
    virtual void send(std::span<const std::uint8_t> bytes) = 0;
    virtual std::vector<std::uint8_t> drain() = 0;
};

class InProcessChannel final : public ByteChannel {
public:
    void send(std::span<const std::uint8_t> bytes) override;
    std::vector<std::uint8_t> drain() override;

private:
    std::mutex mutex_;
    std::vector<std::uint8_t> buffer_;
};

// Loopback TCP socket pair on 127.0.0.1; one instance carries one direction.
class TcpLoopbackChannel final : public ByteChannel {
public:
    TcpLoopbackChannel();
    ~TcpLoopbackChannel() override;
    TcpLoopbackChannel(const TcpLoopbackChannel&) = delete;
    TcpLoopbackChannel& operator=(const TcpLoopbackChannel&) = delete;

    void send(std::span<const std::uint8_t> bytes) override;
    std::vector<std::uint8_t> drain() override;

private:
    int tx_fd_ = -1;
    int rx_fd_ = -1;
};

struct SessionSettings {
    OptimizerSettings optimizer{};
    PipelineSettings pipeline{};
    double match_window_s = 0.0005;
    double recalibration_interval_s = 0.0;  // <= 0: one calibration per session
    std::vector<std::uint16_t> drop_downlink_epochs;  // injected downlink faults
    bool use_tcp_loopback = false;
};

struct ElectrodeOutcome {
    int electrode_id = 0;
    DetectionReport report;
    int factor = 1;
    double threshold_uv = 0.0;
    bool flagged = false;
};

struct SessionLog {
    std::vector<nlohmann::json> records;

    void add(nlohmann::json record) { records.push_back(std::move(record)); }
    std::size_t count_type(const std::string& type) const;
    void write_jsonl(const std::string& path) const;
};

struct SessionResult {
    SessionLog log;
    ConfigVector server_config;  // last one the server computed
    std::uint16_t server_epoch = 0;
    std::uint16_t headstage_epoch = 0;  // last applied on the headstage
    bool streamed_on_stale_config = false;
    AcquisitionCost cost;  // summed over epochs
    std::vector<ElectrodeOutcome> outcomes;
    std::uint64_t uplink_payload_bytes = 0;
    std::uint64_t n_events = 0;
    double cr_acquisition = 0.0;  // 0 when nothing streamed
    double duration_s = 0.0;

    double mean_sde() const;
    double mean_factor() const;
};

// Two-phase closed loop: offline calibration (optimize, downlink through the
// codec) then online streaming (acquire, condition, detect, packetize back
// through the uplink codec). The headstage half only ever sees decoded
// packets. Codec or downlink faults degrade the stream, never halt it.
SessionResult run_session(const SessionDataset& dataset, const MlpModel& model,
                          const SessionSettings& settings, const ClockPlan& plan,
                          double duration_s);

}  // namespace ahs
