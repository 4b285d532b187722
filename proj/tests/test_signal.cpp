#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "sfdoa/errors.hpp"
#include "sfdoa/signal.hpp"
#include "sfdoa/sphharm.hpp"
#include "sfdoa/wav.hpp"

using namespace sfdoa;

TEST_SUITE("signal") {
  TEST_CASE("rfft matches a direct DFT and inverts") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> x(50);
    for (double& v : x) v = g(rng);
    const std::size_t n = 64;
    const auto spec = rfft(x, n);
    REQUIRE(spec.size() == n / 2 + 1);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      cdouble direct = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        direct += x[i] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * i) / static_cast<double>(n));
      CHECK(std::abs(spec[k] - direct) < 1e-10);
    }
    const auto back = irfft(spec, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(i < x.size() ? x[i] : 0.0).epsilon(1e-12));
    CHECK_THROWS_AS(rfft(x, 16), ArgumentError);
    CHECK_THROWS_AS(irfft(spec, 128), ArgumentError);
  }

  TEST_CASE("fft_convolve equals direct convolution") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<double> a(37), b(11);
    for (double& v : a) v = g(rng);
    for (double& v : b) v = g(rng);
    const auto c = fft_convolve(a, b);
    REQUIRE(c.size() == a.size() + b.size() - 1);
    for (std::size_t n = 0; n < c.size(); ++n) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k)
        if (n >= k && n - k < a.size()) s += a[n - k] * b[k];
      CHECK(c[n] == doctest::Approx(s).epsilon(1e-10));
    }
    CHECK(fft_convolve(std::vector<double>{}, b).empty());
  }

  TEST_CASE("periodic Hann window sums to one at half overlap") {
    const auto w = hann_window(512);
    CHECK(w[0] == 0.0);
    CHECK(w[256] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 256; ++i) CHECK(w[i] + w[i + 256] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("next_pow2") {
    CHECK(next_pow2(1) == 1);
    CHECK(next_pow2(5) == 8);
    CHECK(next_pow2(1024) == 1024);
    CHECK(next_pow2(1025) == 2048);
  }

  TEST_CASE("seed mixing is deterministic and separates streams") {
    CHECK(mix_seed(7, {1, 2, 3}) == mix_seed(7, {1, 2, 3}));
    CHECK(mix_seed(7, {1, 2, 3}) != mix_seed(7, {1, 2, 4}));
    CHECK(mix_seed(7, {1, 2, 3}) != mix_seed(8, {1, 2, 3}));
    CHECK(mix_seed(7, {1, 2}) != mix_seed(7, {2, 1}));
    CHECK(mix_seed(7, {0}) != mix_seed(7, {}));
  }

  TEST_CASE("synthetic speech") {
    const auto s = synthetic_speech(2.0, 16000.0, 3);
    CHECK(s.size() == 32000);
    CHECK(std::sqrt(mean_power(s)) == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(s == synthetic_speech(2.0, 16000.0, 3));
    CHECK(s != synthetic_speech(2.0, 16000.0, 4));
    // The leading 50 ms are silent and the signal has pauses.
    for (std::size_t i = 0; i < 800; ++i) CHECK(s[i] == 0.0);
    std::size_t silent_blocks = 0;
    for (std::size_t b = 0; b + 160 <= s.size(); b += 160) {
      double e = 0.0;
      for (std::size_t i = b; i < b + 160; ++i) e += s[i] * s[i];
      if (e / 160.0 < 1e-6) ++silent_blocks;
    }
    CHECK(silent_blocks >= 5);
    CHECK_THROWS_AS(synthetic_speech(0.0, 16000.0, 1), ArgumentError);
  }

  TEST_CASE("WAV round trip") {
    const auto path = std::filesystem::temp_directory_path() / "sfdoa_wav_roundtrip.wav";
    std::vector<std::vector<double>> ch{{0.0, 0.5, -0.25, 1.0}, {0.1, 0.2, 0.3, 0.4}};
    write_wav_float(path.string(), ch, 16000.0);
    const auto back = read_wav(path.string());
    CHECK(back.fs == 16000.0);
    REQUIRE(back.channels.size() == 2);
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < 4; ++i)
        CHECK(back.channels[c][i] == doctest::Approx(ch[c][i]).epsilon(1e-7));
    CHECK_THROWS(read_speech_wav(path.string(), 16000.0));  // not mono
    CHECK_THROWS_AS(write_wav_float(path.string(), {{1.0}, {1.0, 2.0}}, 16000.0), ArgumentError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_wav(path.string()), IoError);
  }
}
