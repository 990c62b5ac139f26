#include "ahs/packets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace ahs {

namespace {

constexpr std::array<char, 4> kConfigMagic = {'A', 'C', 'F', 'G'};
constexpr std::array<char, 4> kEventMagic = {'A', 'S', 'P', 'K'};

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) {
            c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        }
        table[i] = c;
    }
    return table;
}

void push_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool magic_matches(std::span<const std::uint8_t> bytes, const std::array<char, 4>& magic) {
    if (bytes.size() < 4) return false;
    return std::memcmp(bytes.data(), magic.data(), 4) == 0;
}

}  // namespace

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes) {
    static const auto table = make_crc_table();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes) {
        crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

std::string to_string(DecodeError e) {
    switch (e) {
        case DecodeError::None: return "None";
        case DecodeError::BadMagic: return "BadMagic";
        case DecodeError::BadCrc: return "BadCrc";
        case DecodeError::Truncated: return "Truncated";
        case DecodeError::UnsupportedVersion: return "UnsupportedVersion";
    }
    return "Unknown";
}

std::int16_t to_tenth_uv(double uv) {
    const double v = std::round(uv * 10.0);
    const double lo = std::numeric_limits<std::int16_t>::min();
    const double hi = std::numeric_limits<std::int16_t>::max();
    return static_cast<std::int16_t>(std::clamp(v, lo, hi));
}

std::vector<std::uint8_t> encode_config(const ConfigPacket& packet) {
    if (packet.entries.size() > 255) {
        throw std::invalid_argument("encode_config: more than 255 electrodes");
    }
    std::vector<std::uint8_t> out;
    out.reserve(12 + 4 * packet.entries.size());
    out.insert(out.end(), kConfigMagic.begin(), kConfigMagic.end());
    out.push_back(packet.version);
    push_u16(out, packet.epoch);
    out.push_back(static_cast<std::uint8_t>(packet.entries.size()));
    for (const auto& e : packet.entries) {
        out.push_back(e.electrode_id);
        out.push_back(e.factor);
        push_u16(out, static_cast<std::uint16_t>(e.threshold_tenth_uv));
    }
    push_u32(out, crc32_ieee(out));
    return out;
}

std::vector<std::uint8_t> encode_event(const SpikeEventPacket& packet) {
    std::vector<std::uint8_t> out;
    out.reserve(kEventPacketSize);
    out.insert(out.end(), kEventMagic.begin(), kEventMagic.end());
    out.push_back(packet.version);
    out.push_back(packet.electrode_id);
    push_u32(out, packet.timestamp_ticks);
    push_u16(out, static_cast<std::uint16_t>(packet.peak_tenth_uv));
    push_u32(out, crc32_ieee(out));
    return out;
}

Decoded<ConfigPacket> decode_config(std::span<const std::uint8_t> bytes) {
    Decoded<ConfigPacket> res;
    if (bytes.size() < 4) {
        res.error = DecodeError::Truncated;
        return res;
    }
    if (!magic_matches(bytes, kConfigMagic)) {
        res.error = DecodeError::BadMagic;
        return res;
    }
    if (bytes.size() < 8) {
        res.error = DecodeError::Truncated;
        return res;
    }
    const std::uint8_t version = bytes[4];
    if (version != kWireVersion) {
        res.error = DecodeError::UnsupportedVersion;
        return res;
    }
    const std::size_t n = bytes[7];
    const std::size_t total = 12 + 4 * n;
    if (bytes.size() < total) {
        res.error = DecodeError::Truncated;
        return res;
    }
    const std::uint32_t expected = crc32_ieee(bytes.first(total - 4));
    if (expected != get_u32(bytes, total - 4)) {
        res.error = DecodeError::BadCrc;
        return res;
    }
    ConfigPacket p;
    p.version = version;
    p.epoch = get_u16(bytes, 5);
    p.entries.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = 8 + 4 * i;
        p.entries[i].electrode_id = bytes[at];
        p.entries[i].factor = bytes[at + 1];
        p.entries[i].threshold_tenth_uv = static_cast<std::int16_t>(get_u16(bytes, at + 2));
    }
    res.packet = std::move(p);
    res.consumed = total;
    return res;
}

Decoded<SpikeEventPacket> decode_event(std::span<const std::uint8_t> bytes) {
    Decoded<SpikeEventPacket> res;
    if (bytes.size() >= 4 && !magic_matches(bytes, kEventMagic)) {
        res.error = DecodeError::BadMagic;
        return res;
    }
    if (bytes.size() < kEventPacketSize) {
        res.error = DecodeError::Truncated;
        return res;
    }
    const std::uint8_t version = bytes[4];
    if (version != kWireVersion) {
        res.error = DecodeError::UnsupportedVersion;
        return res;
    }
    const std::uint32_t expected = crc32_ieee(bytes.first(kEventPacketSize - 4));
    if (expected != get_u32(bytes, kEventPacketSize - 4)) {
        res.error = DecodeError::BadCrc;
        return res;
    }
    SpikeEventPacket p;
    p.version = version;
    p.electrode_id = bytes[5];
    p.timestamp_ticks = get_u32(bytes, 6);
    p.peak_tenth_uv = static_cast<std::int16_t>(get_u16(bytes, 10));
    res.packet = p;
    res.consumed = kEventPacketSize;
    return res;
}

void PacketStreamDecoder::feed(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

void PacketStreamDecoder::compact() {
    if (cursor_ == 0) return;
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(cursor_));
    cursor_ = 0;
}

std::size_t PacketStreamDecoder::find_next_magic(std::size_t from) const {
    for (std::size_t i = from; i + 4 <= buffer_.size(); ++i) {
        const std::span<const std::uint8_t> view(&buffer_[i], 4);
        if (magic_matches(view, kConfigMagic) || magic_matches(view, kEventMagic)) return i;
    }
    return buffer_.size();
}

std::optional<PacketStreamDecoder::Item> PacketStreamDecoder::next() {
    compact();
    if (buffer_.empty()) return std::nullopt;

    const std::span<const std::uint8_t> view(buffer_.data(), buffer_.size());
    const bool starts_config = magic_matches(view, kConfigMagic);
    const bool starts_event = magic_matches(view, kEventMagic);

    // drop the garbage prefix, keeping a tail that may begin a magic
    const auto resync = [this] {
        std::size_t skip = find_next_magic(1);
        if (skip == buffer_.size() && !finished_ && buffer_.size() > 3) skip = buffer_.size() - 3;
        skip = std::max<std::size_t>(skip, 1);
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(skip));
    };
    const auto consume = [this](std::size_t n) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n));
    };
    const auto error_item = [](DecodeError e) {
        Item item;
        item.kind = Item::Kind::Error;
        item.error = e;
        return item;
    };

    if (!starts_config && !starts_event) {
        if (buffer_.size() < 4 && !finished_) return std::nullopt;
        resync();
        return error_item(DecodeError::BadMagic);
    }

    if (starts_config) {
        auto dec = decode_config(view);
        if (dec) {
            consume(dec.consumed);
            Item item;
            item.kind = Item::Kind::Config;
            item.config = std::move(*dec.packet);
            return item;
        }
        if (dec.error == DecodeError::Truncated && !finished_) return std::nullopt;
        resync();
        return error_item(dec.error);
    }

    const auto dec = decode_event(view);
    if (dec) {
        consume(dec.consumed);
        Item item;
        item.kind = Item::Kind::Event;
        item.event = *dec.packet;
        return item;
    }
    if (dec.error == DecodeError::Truncated && !finished_) return std::nullopt;
    resync();
    return error_item(dec.error);
}

}  // namespace ahs
