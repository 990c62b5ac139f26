#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ahs {

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes);

enum class DecodeError : std::uint8_t {
    None = 0,
    BadMagic,
    BadCrc,
    Truncated,
    UnsupportedVersion,
};

std::string to_string(DecodeError e);

inline constexpr std::uint8_t kWireVersion = 1;

// Downlink: server -> headstage configuration vector.
// "ACFG" | version u8 | epoch u16 | n u8 | n x (id u8, factor u8,
// threshold i16 µV*10) | crc32 over all prior bytes; little-endian.
struct ConfigPacket {
    struct Entry {
        std::uint8_t electrode_id = 0;
        std::uint8_t factor = 1;
        std::int16_t threshold_tenth_uv = 0;

        double threshold_uv() const { return threshold_tenth_uv / 10.0; }
        bool operator==(const Entry&) const = default;
    };

    std::uint8_t version = kWireVersion;
    std::uint16_t epoch = 0;
    std::vector<Entry> entries;

    bool operator==(const ConfigPacket&) const = default;
};

// Uplink: one detected spike event.
// "ASPK" | version u8 | electrode u8 | timestamp u32 ticks | peak i16 µV*10
// | crc32; little-endian. 16 bytes total.
struct SpikeEventPacket {
    std::uint8_t version = kWireVersion;
    std::uint8_t electrode_id = 0;
    std::uint32_t timestamp_ticks = 0;
    std::int16_t peak_tenth_uv = 0;

    double peak_uv() const { return peak_tenth_uv / 10.0; }
    bool operator==(const SpikeEventPacket&) const = default;
};

inline constexpr std::size_t kEventPacketSize = 16;

std::int16_t to_tenth_uv(double uv);  // rounds, saturates to i16

std::vector<std::uint8_t> encode_config(const ConfigPacket& packet);
std::vector<std::uint8_t> encode_event(const SpikeEventPacket& packet);

template <typename T>
struct Decoded {
    std::optional<T> packet;
    DecodeError error = DecodeError::None;
    std::size_t consumed = 0;  // bytes consumed on success

    explicit operator bool() const { return packet.has_value(); }
};

Decoded<ConfigPacket> decode_config(std::span<const std::uint8_t> bytes);
Decoded<SpikeEventPacket> decode_event(std::span<const std::uint8_t> bytes);

// Incremental decoder over a byte stream carrying either packet type.
// After an error it resynchronizes on the next magic sequence.
class PacketStreamDecoder {
public:
    struct Item {
        enum class Kind { Config, Event, Error } kind = Kind::Error;
        ConfigPacket config;
        SpikeEventPacket event;
        DecodeError error = DecodeError::None;
    };

    void feed(std::span<const std::uint8_t> bytes);
    void finish() { finished_ = true; }

    // nullopt: need more bytes (or stream fully drained)
    std::optional<Item> next();

    std::size_t buffered() const { return buffer_.size() - cursor_; }

private:
    void compact();
    std::size_t find_next_magic(std::size_t from) const;

    std::vector<std::uint8_t> buffer_;
    std::size_t cursor_ = 0;
    bool finished_ = false;
};

}  // namespace ahs
