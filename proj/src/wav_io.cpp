#include "vemse/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace vemse {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::uint32_t read_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
    b.push_back((v >> 16) & 0xff);
    b.push_back((v >> 24) & 0xff);
}

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("wav: " + path + ": " + what);
}

}  // namespace

Waveform read_wav(const std::string& path) { return read_wav(path, 0); }

Waveform read_wav(const std::string& path, int expected_rate) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 44) fail(path, "file too short");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        fail(path, "not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::size_t data_off = 0, data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + len > bytes.size()) fail(path, "truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) fail(path, "fmt chunk too short");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_off = body;
            data_len = len;
        }
        pos = body + len + (len & 1);  // chunks are word-aligned
    }
    if (!have_fmt) fail(path, "missing fmt chunk");
    if (data_off == 0) fail(path, "missing data chunk");
    if (channels != 1) fail(path, "only mono supported");
    if (expected_rate > 0 && int(rate) != expected_rate)
        fail(path, "sample rate " + std::to_string(rate) + " does not match required " +
                       std::to_string(expected_rate));

    Waveform w;
    w.sample_rate = int(rate);
    if (format == kFormatPcm && bits == 16) {
        const std::size_t n = data_len / 2;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::int16_t v =
                std::int16_t(read_u16(bytes.data() + data_off + 2 * i));
            w.samples[i] = double(v) / 32768.0;
        }
    } else if (format == kFormatFloat && bits == 32) {
        const std::size_t n = data_len / 4;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t u = read_u32(bytes.data() + data_off + 4 * i);
            float f;
            std::memcpy(&f, &u, 4);
            w.samples[i] = double(f);
        }
    } else {
        fail(path, "unsupported format (need 16-bit PCM or 32-bit float)");
    }
    return w;
}

void write_wav(const std::string& path, const Waveform& w, WavFormat fmt) {
    const std::uint16_t bits = fmt == WavFormat::pcm16 ? 16 : 32;
    const std::uint16_t code = fmt == WavFormat::pcm16 ? kFormatPcm : kFormatFloat;
    const std::uint32_t bytes_per = bits / 8;
    const std::uint32_t data_len = std::uint32_t(w.samples.size()) * bytes_per;

    std::vector<unsigned char> b;
    b.reserve(44 + data_len);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    put_u32(b, 36 + data_len);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(b, 16);
    put_u16(b, code);
    put_u16(b, 1);  // mono
    put_u32(b, std::uint32_t(w.sample_rate));
    put_u32(b, std::uint32_t(w.sample_rate) * bytes_per);
    put_u16(b, std::uint16_t(bytes_per));
    put_u16(b, bits);
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    put_u32(b, data_len);

    for (double s : w.samples) {
        if (fmt == WavFormat::pcm16) {
            double v = std::round(s * 32768.0);
            v = std::clamp(v, -32768.0, 32767.0);
            put_u16(b, std::uint16_t(std::int16_t(v)));
        } else {
            const float f = float(s);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            put_u32(b, u);
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
    if (!out) fail(path, "write failed");
}

}  // namespace vemse
