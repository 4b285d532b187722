#pragma once

#include <string>
#include <vector>

namespace sfdoa {

struct WavData {
  std::vector<std::vector<double>> channels;
  double fs = 0.0;
};

/// Reads PCM 16-bit or IEEE float 32-bit RIFF/WAVE files.
WavData read_wav(const std::string& path);

/// Reads a mono file and checks the sample rate (no resampling is done).
std::vector<double> read_speech_wav(const std::string& path, double expected_fs);

/// Writes IEEE float 32-bit samples; all channels must have equal length.
void write_wav_float(const std::string& path, const std::vector<std::vector<double>>& channels,
                     double fs);

}  // namespace sfdoa
