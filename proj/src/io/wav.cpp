#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gunloc/error.hpp"
#include "gunloc/io.hpp"

namespace gunloc::io {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

[[noreturn]] void bad(const std::filesystem::path& path, const std::string& what) {
    throw Error(ErrorKind::InvalidInput, path.string() + ": " + what);
}

std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

void put32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {char(v & 0xFF), char(v >> 8 & 0xFF), char(v >> 16 & 0xFF), char(v >> 24 & 0xFF)};
    out.write(b, 4);
}
void put16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {char(v & 0xFF), char(v >> 8 & 0xFF)};
    out.write(b, 2);
}

}  // namespace

AudioSegment read_wav(const std::filesystem::path& path, double start_time) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad(path, "cannot open");
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        bad(path, "not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::size_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            // Truncated data chunks are common from interrupted recorders; keep what is there.
            if (std::memcmp(chunk, "data", 4) != 0) bad(path, "truncated chunk");
        }
        const std::size_t avail = std::min(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (avail < 16) bad(path, "fmt chunk too short");
            format = le16(chunk + 8);
            channels = le16(chunk + 10);
            rate = le32(chunk + 12);
            bits = le16(chunk + 22);
            if (format == kFormatExtensible) {
                if (avail < 26) bad(path, "extensible fmt chunk too short");
                format = le16(chunk + 32);
            }
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_size = avail;
        }
        pos = body + size + (size & 1);
    }
    if (channels == 0 || rate == 0) bad(path, "missing fmt chunk");
    if (!data) bad(path, "missing data chunk");
    if (rate < kMinWavSampleRate) bad(path, "sample rate " + std::to_string(rate) + " Hz is below 12000 Hz");

    const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
    const bool flt = format == kFormatFloat && bits == 32;
    if (!pcm && !flt)
        bad(path, "unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) + " bits)");

    const std::size_t width = bits / 8;
    const std::size_t frame = width * channels;
    const std::size_t frames = data_size / frame;
    AudioSegment seg;
    seg.sample_rate = rate;
    seg.start_time = start_time;
    seg.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const unsigned char* p = data + i * frame;
        double v = 0.0;
        if (flt) {
            float f;
            const std::uint32_t u = le32(p);
            std::memcpy(&f, &u, sizeof f);
            v = f;
        } else if (bits == 16) {
            v = static_cast<std::int16_t>(le16(p)) / 32768.0;
        } else if (bits == 24) {
            std::int32_t s = p[0] | p[1] << 8 | p[2] << 16;
            if (s & 0x800000) s -= 0x1000000;
            v = s / 8388608.0;
        } else {
            v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
        }
        if (!std::isfinite(v)) bad(path, "non-finite sample at frame " + std::to_string(i));
        seg.samples[i] = v;
    }
    return seg;
}

void write_wav(const std::filesystem::path& path, const AudioSegment& seg, WavEncoding encoding) {
    if (!(seg.sample_rate > 0) || seg.sample_rate != std::floor(seg.sample_rate))
        throw Error(ErrorKind::InvalidInput, "WAV sample rate must be a positive integer");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidInput, path.string() + ": cannot open for writing");

    const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : encoding == WavEncoding::Pcm24 ? 24 : 32;
    const std::uint16_t format = encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm;
    const std::uint32_t width = bits / 8;
    const auto data_size = static_cast<std::uint32_t>(seg.samples.size() * width);
    const auto rate = static_cast<std::uint32_t>(seg.sample_rate);

    out.write("RIFF", 4);
    put32(out, 36 + data_size + (data_size & 1));
    out.write("WAVEfmt ", 8);
    put32(out, 16);
    put16(out, format);
    put16(out, 1);
    put32(out, rate);
    put32(out, rate * width);
    put16(out, static_cast<std::uint16_t>(width));
    put16(out, bits);
    out.write("data", 4);
    put32(out, data_size);
    for (double v : seg.samples) {
        if (encoding == WavEncoding::Float32) {
            const float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, sizeof u);
            put32(out, u);
            continue;
        }
        const double full = encoding == WavEncoding::Pcm16 ? 32768.0 : 8388608.0;
        const auto q = static_cast<std::int32_t>(std::clamp(std::lround(v * full), -static_cast<long>(full),
                                                            static_cast<long>(full) - 1));
        const auto u = static_cast<std::uint32_t>(q);
        if (encoding == WavEncoding::Pcm16) {
            put16(out, static_cast<std::uint16_t>(u & 0xFFFF));
        } else {
            const char b[3] = {char(u & 0xFF), char(u >> 8 & 0xFF), char(u >> 16 & 0xFF)};
            out.write(b, 3);
        }
    }
    if (data_size & 1) out.put('\0');
    if (!out) throw Error(ErrorKind::InvalidInput, path.string() + ": write failed");
}

}  // namespace gunloc::io
