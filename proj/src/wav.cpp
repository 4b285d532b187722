#include "sfdoa/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sfdoa/errors.hpp"

namespace sfdoa {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ofstream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put16(std::ofstream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw IoError(path + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* chunk = buf.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) throw IoError(path + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw IoError(path + ": short fmt chunk");
      format = le16(buf.data() + body);
      channels = le16(buf.data() + body + 2);
      rate = le32(buf.data() + body + 4);
      bits = le16(buf.data() + body + 14);
      if (format == 0xFFFE && size >= 26) format = le16(buf.data() + body + 24);  // extensible
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = buf.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!data || channels == 0) throw IoError(path + ": missing fmt or data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) throw IoError(path + ": only PCM 16-bit and float 32-bit are supported");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  WavData out;
  out.fs = rate;
  out.channels.assign(channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + (i * channels + c) * width;
      if (pcm16) {
        out.channels[c][i] = static_cast<std::int16_t>(le16(s)) / 32768.0;
      } else {
        const std::uint32_t u = le32(s);
        float f;
        std::memcpy(&f, &u, 4);
        out.channels[c][i] = f;
      }
    }
  }
  return out;
}

std::vector<double> read_speech_wav(const std::string& path, double expected_fs) {
  WavData w = read_wav(path);
  if (w.channels.size() != 1) throw IoError(path + ": expected a mono file");
  if (std::abs(w.fs - expected_fs) > 0.5)
    throw IoError(path + ": sample rate " + std::to_string(w.fs) + " Hz, expected " +
                  std::to_string(expected_fs) + " Hz (resampling is not supported)");
  return std::move(w.channels.front());
}

void write_wav_float(const std::string& path, const std::vector<std::vector<double>>& channels,
                     double fs) {
  if (channels.empty()) throw ArgumentError("write_wav_float: no channels");
  const std::size_t frames = channels.front().size();
  for (const auto& c : channels)
    if (c.size() != frames) throw ArgumentError("write_wav_float: channel lengths differ");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  const auto nch = static_cast<std::uint16_t>(channels.size());
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * 4);
  os.write("RIFF", 4);
  put32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put32(os, 16);
  put16(os, 3);
  put16(os, nch);
  put32(os, static_cast<std::uint32_t>(fs));
  put32(os, static_cast<std::uint32_t>(fs) * nch * 4);
  put16(os, static_cast<std::uint16_t>(nch * 4));
  put16(os, 32);
  os.write("data", 4);
  put32(os, data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& c : channels) {
      const float f = static_cast<float>(c[i]);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put32(os, u);
    }
  }
  if (!os) throw IoError("failed writing " + path);
}

}  // namespace sfdoa
