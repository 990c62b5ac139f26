#include "ahs/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "ahs/filters.hpp"
#include "ahs/parallel.hpp"

namespace ahs {

using nlohmann::json;

void InProcessChannel::send(std::span<const std::uint8_t> bytes) {
    std::lock_guard<std::mutex> lock(mutex_);
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::vector<std::uint8_t> InProcessChannel::drain() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::uint8_t> out;
    out.swap(buffer_);
    return out;
}

TcpLoopbackChannel::TcpLoopbackChannel() {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw std::runtime_error("TcpLoopbackChannel: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listener, 1) != 0) {
        ::close(listener);
        throw std::runtime_error("TcpLoopbackChannel: bind/listen failed");
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        ::close(listener);
        throw std::runtime_error("TcpLoopbackChannel: getsockname failed");
    }

    tx_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (tx_fd_ < 0 || ::connect(tx_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listener);
        if (tx_fd_ >= 0) ::close(tx_fd_);
        throw std::runtime_error("TcpLoopbackChannel: connect failed");
    }
    rx_fd_ = ::accept(listener, nullptr, nullptr);
    ::close(listener);
    if (rx_fd_ < 0) {
        ::close(tx_fd_);
        throw std::runtime_error("TcpLoopbackChannel: accept failed");
    }
    const int flags = ::fcntl(rx_fd_, F_GETFL, 0);
    ::fcntl(rx_fd_, F_SETFL, flags | O_NONBLOCK);
}

TcpLoopbackChannel::~TcpLoopbackChannel() {
    if (tx_fd_ >= 0) ::close(tx_fd_);
    if (rx_fd_ >= 0) ::close(rx_fd_);
}

void TcpLoopbackChannel::send(std::span<const std::uint8_t> bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t n = ::write(tx_fd_, bytes.data() + sent, bytes.size() - sent);
        if (n < 0) throw std::runtime_error("TcpLoopbackChannel: write failed");
        sent += static_cast<std::size_t>(n);
    }
}

std::vector<std::uint8_t> TcpLoopbackChannel::drain() {
    std::vector<std::uint8_t> out;
    std::uint8_t chunk[4096];
    for (;;) {
        const ssize_t n = ::read(rx_fd_, chunk, sizeof(chunk));
        if (n <= 0) break;
        out.insert(out.end(), chunk, chunk + n);
    }
    return out;
}

std::size_t SessionLog::count_type(const std::string& type) const {
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.value("type", "") == type) ++n;
    }
    return n;
}

void SessionLog::write_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("SessionLog: cannot open " + path);
    for (const auto& r : records) out << r.dump() << "\n";
}

double SessionResult::mean_sde() const {
    if (outcomes.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& o : outcomes) acc += o.report.sde;
    return acc / static_cast<double>(outcomes.size());
}

double SessionResult::mean_factor() const {
    if (outcomes.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& o : outcomes) acc += o.factor;
    return acc / static_cast<double>(outcomes.size());
}

namespace {

// headstage half: applies decoded packets, executes the schedule, emits
// event-packet bytes; it has no visibility into the optimizer or model
struct Headstage {
    std::optional<ConfigPacket> config;

    std::vector<ElectrodeSchedule> schedules(const ClockPlan& plan) const {
        std::vector<ElectrodeSchedule> out;
        if (!config) return out;
        const double r_max = plan.r_max_hz();
        out.reserve(config->entries.size());
        for (const auto& e : config->entries) {
            ElectrodeSchedule s;
            s.electrode_id = e.electrode_id;
            s.factor = std::max<int>(1, e.factor);
            s.realized_rate_hz = r_max / s.factor;
            s.target_rate_hz = s.realized_rate_hz;
            s.threshold_uv = e.threshold_uv();
            out.push_back(s);
        }
        return out;
    }
};

NeuralTrace slice_trace(const NeuralTrace& full, std::size_t begin, std::size_t end) {
    NeuralTrace out;
    out.uv_per_count = full.uv_per_count;
    out.channel_ids = full.channel_ids;
    out.rates_hz = full.rates_hz;
    out.counts.reserve(full.n_channels());
    for (const auto& ch : full.counts) {
        out.counts.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(begin),
                                ch.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace

SessionResult run_session(const SessionDataset& dataset, const MlpModel& model,
                          const SessionSettings& settings, const ClockPlan& plan,
                          double duration_s) {
    plan.validate();
    settings.optimizer.validate();
    if (duration_s < 0.0) throw std::invalid_argument("run_session: negative duration");
    dataset.trace.validate();
    if (dataset.templates.size() != dataset.trace.n_channels()) {
        throw std::invalid_argument("run_session: one template per channel required");
    }

    const double r_max = plan.r_max_hz();
    const std::size_t n_channels = dataset.trace.n_channels();
    const auto full_len = dataset.trace.counts.empty() ? 0 : dataset.trace.counts[0].size();
    const auto want = static_cast<std::size_t>(std::llround(duration_s * r_max));
    const std::size_t n_samples = std::min(want, full_len);
    const double effective_duration = static_cast<double>(n_samples) / r_max;

    SessionResult result;
    result.duration_s = effective_duration;
    result.log.add(json{{"type", "session_start"},
                        {"seed", dataset.seed},
                        {"n_electrodes", n_channels},
                        {"duration_s", effective_duration},
                        {"epsilon", settings.optimizer.epsilon}});

    // offline calibration inputs: per-electrode noise floor at full rate
    std::vector<double> noise_sigmas(n_channels);
    parallel_for(n_channels, [&](std::size_t c) {
        const BandpassFilter filter(dataset.trace.rates_hz[c], settings.pipeline.band);
        const ChannelTrace filtered = filter.process(dataset.trace.channel_uv(c));
        noise_sigmas[c] = estimate_noise_sigma_masked(filtered);
    });

    std::unique_ptr<ByteChannel> downlink;
    std::unique_ptr<ByteChannel> uplink;
    if (settings.use_tcp_loopback) {
        downlink = std::make_unique<TcpLoopbackChannel>();
        uplink = std::make_unique<TcpLoopbackChannel>();
    } else {
        downlink = std::make_unique<InProcessChannel>();
        uplink = std::make_unique<InProcessChannel>();
    }

    // epoch layout
    std::size_t seg_len = n_samples;
    if (settings.recalibration_interval_s > 0.0) {
        seg_len = static_cast<std::size_t>(
            std::llround(settings.recalibration_interval_s * r_max));
        seg_len = std::max<std::size_t>(seg_len, 1);
    }
    const std::size_t n_epochs =
        n_samples == 0 ? 1 : (n_samples + seg_len - 1) / std::max<std::size_t>(seg_len, 1);

    Headstage headstage;
    PacketStreamDecoder downlink_decoder;
    PacketStreamDecoder uplink_decoder;
    std::vector<std::vector<SpikeEvent>> received(n_channels);
    std::vector<ChannelCost> cost_acc(n_channels);
    for (std::size_t c = 0; c < n_channels; ++c) {
        cost_acc[c].channel_id = dataset.trace.channel_ids[c];
    }

    for (std::size_t epoch_idx = 0; epoch_idx < n_epochs; ++epoch_idx) {
        const auto epoch = static_cast<std::uint16_t>(epoch_idx + 1);

        // phase 1: server-side optimization and downlink
        ConfigVector config = optimize_array(dataset.templates, noise_sigmas, model,
                                             settings.optimizer, plan);
        config.epoch = epoch;
        result.server_config = config;
        result.server_epoch = epoch;

        ConfigPacket packet;
        packet.epoch = epoch;
        for (const auto& s : config.schedules) {
            ConfigPacket::Entry e;
            e.electrode_id = static_cast<std::uint8_t>(s.electrode_id);
            e.factor = static_cast<std::uint8_t>(s.factor);
            e.threshold_tenth_uv = to_tenth_uv(s.threshold_uv);
            packet.entries.push_back(e);
        }
        const bool dropped =
            std::find(settings.drop_downlink_epochs.begin(), settings.drop_downlink_epochs.end(),
                      epoch) != settings.drop_downlink_epochs.end();
        if (dropped) {
            result.log.add(json{{"type", "downlink_fault"}, {"epoch", epoch}});
        } else {
            const auto bytes = encode_config(packet);
            downlink->send(bytes);
        }

        // headstage: apply whatever survived the downlink
        downlink_decoder.feed(downlink->drain());
        while (auto item = downlink_decoder.next()) {
            if (item->kind == PacketStreamDecoder::Item::Kind::Config) {
                headstage.config = std::move(item->config);
            } else if (item->kind == PacketStreamDecoder::Item::Kind::Error) {
                result.log.add(json{{"type", "codec_error"},
                                    {"side", "downlink"},
                                    {"error", to_string(item->error)}});
            }
        }
        const bool stale = !headstage.config || headstage.config->epoch != epoch;
        result.headstage_epoch = headstage.config ? headstage.config->epoch : 0;
        result.log.add(json{{"type", "config"},
                            {"epoch", epoch},
                            {"applied_epoch", result.headstage_epoch},
                            {"stale", stale},
                            {"n_entries", headstage.config ? headstage.config->entries.size() : 0}});

        // phase 2: online streaming for this segment
        const std::size_t begin = std::min(epoch_idx * seg_len, n_samples);
        const std::size_t end = std::min(begin + seg_len, n_samples);
        if (begin >= end) continue;
        if (!headstage.config) {
            result.log.add(json{{"type", "no_config"}, {"epoch", epoch}});
            continue;
        }
        if (stale) result.streamed_on_stale_config = true;

        const NeuralTrace segment = slice_trace(dataset.trace, begin, end);
        const auto schedules = headstage.schedules(plan);
        const AcquireResult acquired = acquire(segment, schedules, plan);
        for (std::size_t c = 0; c < n_channels; ++c) {
            cost_acc[c].factor = acquired.cost.per_channel[c].factor;
            cost_acc[c].executed += acquired.cost.per_channel[c].executed;
            cost_acc[c].skipped += acquired.cost.per_channel[c].skipped;
        }

        const double t_offset = static_cast<double>(begin) / r_max;
        std::vector<std::vector<SpikeEvent>> segment_events(n_channels);
        std::vector<std::uint8_t> clamped(n_channels, 0);
        parallel_for(n_channels, [&](std::size_t c) {
            const ChannelTrace uv = acquired.trace.channel_uv(c);
            const auto cond =
                condition_and_detect(uv, schedules[c].threshold_uv, settings.pipeline);
            clamped[c] = cond.band_clamped ? 1 : 0;
            segment_events[c] = cond.events;
        });
        for (std::size_t c = 0; c < n_channels; ++c) {
            if (clamped[c]) {
                result.log.add(json{{"type", "band_clamped"},
                                    {"epoch", epoch},
                                    {"electrode", dataset.trace.channel_ids[c]}});
            }
        }

        // packetize in global time order
        std::vector<SpikeEventPacket> outgoing;
        for (std::size_t c = 0; c < n_channels; ++c) {
            for (const auto& ev : segment_events[c]) {
                SpikeEventPacket p;
                p.electrode_id = static_cast<std::uint8_t>(ev.electrode_id);
                p.timestamp_ticks =
                    static_cast<std::uint32_t>(std::llround((t_offset + ev.time_s) * plan.f_clk_hz));
                p.peak_tenth_uv = to_tenth_uv(ev.peak_uv);
                outgoing.push_back(p);
            }
        }
        std::sort(outgoing.begin(), outgoing.end(), [](const auto& a, const auto& b) {
            return a.timestamp_ticks != b.timestamp_ticks ? a.timestamp_ticks < b.timestamp_ticks
                                                          : a.electrode_id < b.electrode_id;
        });
        for (const auto& p : outgoing) {
            const auto bytes = encode_event(p);
            result.uplink_payload_bytes += bytes.size();
            uplink->send(bytes);
        }

        // server: collect the uplink stream
        uplink_decoder.feed(uplink->drain());
        while (auto item = uplink_decoder.next()) {
            if (item->kind == PacketStreamDecoder::Item::Kind::Event) {
                const auto& p = item->event;
                const int idx = dataset.trace.index_of(p.electrode_id);
                if (idx < 0) continue;
                SpikeEvent ev;
                ev.electrode_id = p.electrode_id;
                ev.time_s = static_cast<double>(p.timestamp_ticks) / plan.f_clk_hz;
                ev.peak_uv = p.peak_uv();
                received[static_cast<std::size_t>(idx)].push_back(ev);
                ++result.n_events;
                result.log.add(json{{"type", "event"},
                                    {"electrode", p.electrode_id},
                                    {"t_ticks", p.timestamp_ticks},
                                    {"peak_tenth_uv", p.peak_tenth_uv}});
            } else if (item->kind == PacketStreamDecoder::Item::Kind::Error) {
                result.log.add(json{{"type", "codec_error"},
                                    {"side", "uplink"},
                                    {"error", to_string(item->error)}});
            }
        }
    }

    // final per-electrode scoring against the ground truth
    result.cost.per_channel = cost_acc;
    if (result.cost.total_executed() > 0) {
        result.cr_acquisition = acquisition_compression_ratio(result.cost);
    }

    result.outcomes.resize(n_channels);
    parallel_for(n_channels, [&](std::size_t c) {
        const int id = dataset.trace.channel_ids[c];
        ElectrodeGroundTruth truth = dataset.ground_truth(id, settings.match_window_s);
        std::erase_if(truth.event_times_s,
                      [&](double t) { return t > effective_duration; });
        ElectrodeOutcome out;
        out.electrode_id = id;
        out.report = match_events(truth, received[c], settings.match_window_s);
        for (const auto& s : result.server_config.schedules) {
            if (s.electrode_id == id) {
                out.factor = s.factor;
                out.threshold_uv = s.threshold_uv;
                out.flagged = s.flagged;
                break;
            }
        }
        result.outcomes[c] = out;
    });

    for (const auto& c : result.cost.per_channel) {
        result.log.add(json{{"type", "cost"},
                            {"channel", c.channel_id},
                            {"factor", c.factor},
                            {"executed", c.executed},
                            {"skipped", c.skipped}});
    }
    for (const auto& o : result.outcomes) {
        result.log.add(json{{"type", "electrode_report"},
                            {"electrode", o.electrode_id},
                            {"fnr", o.report.fnr},
                            {"fpr", o.report.fpr},
                            {"sde", o.report.sde},
                            {"factor", o.factor},
                            {"threshold_uv", o.threshold_uv},
                            {"flagged", o.flagged}});
    }
    result.log.add(json{{"type", "summary"},
                        {"cr_acquisition", result.cr_acquisition},
                        {"uplink_payload_bytes", result.uplink_payload_bytes},
                        {"n_events", result.n_events},
                        {"server_epoch", result.server_epoch},
                        {"headstage_epoch", result.headstage_epoch},
                        {"streamed_on_stale_config", result.streamed_on_stale_config}});
    return result;
}

}  // namespace ahs
