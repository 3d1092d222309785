#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "g2lab/config.hpp"
#include "g2lab/correlation.hpp"
#include "g2lab/emitters.hpp"
#include "g2lab/detectors.hpp"
#include "g2lab/io.hpp"

using namespace g2lab;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "g2lab-unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ErrorCode decode_error(std::string_view bytes) {
  try {
    decode_stream(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode accepted bad input");
  return ErrorCode::invalid_argument;
}

std::string config_error(std::string_view text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  FAIL("config accepted bad input");
  return {};
}

constexpr const char* kMinimal = R"({
  "source": {"kind": "poisson", "rate_hz": 300000},
  "configuration": "single_detector",
  "detectors": [{"preset": "apd-paper"}],
  "duration_s": 0.5,
  "seed": 7,
  "correlation": {"estimator": "all_pairs", "tau_max_ns": 200, "bin_width_ns": 1}
})";

}  // namespace

TEST_CASE("PTS1 round trip of a large photon stream is byte-identical") {
  const auto s = simulate_poisson(1e6, ticks_from_seconds(1.0), {50, 0});
  REQUIRE(s.events.size() > 990'000);
  const auto path = scratch("photons.pts");
  write_stream(path, s);
  const auto back = read_stream(path);
  REQUIRE(std::holds_alternative<PhotonStream>(back));
  CHECK(std::get<PhotonStream>(back) == s);
  CHECK(encode_stream(back) == read_text_file(path));
  CHECK(std::filesystem::file_size(path) == kPtsHeaderSize + s.label.size() + 8 * s.events.size());
}

TEST_CASE("PTS1 click stream keeps provenance and detector id") {
  const auto s = simulate_poisson(1e7, ns(1'000'000), {51, 0});
  const auto c = detect(s, DetectorParams::apd_paper(), {51, 1}, 2);
  const auto back = decode_stream(encode_stream(c));
  REQUIRE(std::holds_alternative<ClickStream>(back));
  CHECK(std::get<ClickStream>(back) == c);
}

TEST_CASE("PTS1 empty stream and header layout") {
  PhotonStream empty{{}, Tick(0), ""};
  const auto bytes = encode_stream(empty);
  CHECK(bytes.size() == kPtsHeaderSize);
  CHECK(bytes.substr(0, 4) == "PTS1");
  CHECK(std::get<PhotonStream>(decode_stream(bytes)) == empty);

  PhotonStream one{{Tick(0x0102030405060708ull)}, Tick(0x0102030405060709ull), "ab"};
  const auto b = encode_stream(one);
  CHECK(static_cast<unsigned char>(b[4]) == 1);
  CHECK(static_cast<unsigned char>(b[8]) == 0xe8);  // 1000 fs
  CHECK(static_cast<unsigned char>(b[9]) == 0x03);
  CHECK(static_cast<unsigned char>(b[14]) == 2);
  CHECK(b.substr(32, 2) == "ab");
  CHECK(static_cast<unsigned char>(b[34]) == 0x08);  // little-endian event
  CHECK(static_cast<unsigned char>(b[41]) == 0x01);
}

TEST_CASE("PTS1 corruption is detected") {
  const PhotonStream s{{Tick(1), Tick(5), Tick(9)}, Tick(10), "x"};
  const auto good = encode_stream(s);
  CHECK(decode_error(good.substr(0, good.size() - 3)) == ErrorCode::corrupt_file);
  CHECK(decode_error(good.substr(0, 10)) == ErrorCode::corrupt_file);
  CHECK(decode_error(good + "z") == ErrorCode::corrupt_file);
  auto bad_magic = good;
  bad_magic[0] = 'Q';
  CHECK(decode_error(bad_magic) == ErrorCode::corrupt_file);
  auto bad_version = good;
  bad_version[4] = 9;
  CHECK(decode_error(bad_version) == ErrorCode::corrupt_file);
  auto bad_tick = good;
  bad_tick[8] = 1;
  CHECK(decode_error(bad_tick) == ErrorCode::corrupt_file);
  auto unordered = good;
  // Second event (at offset 32 + 1 + 8) set below the first.
  std::memset(unordered.data() + 41, 0, 8);
  CHECK(decode_error(unordered) == ErrorCode::corrupt_file);
  auto late = good;
  late[49] = 20;  // third event beyond the duration
  CHECK(decode_error(late) == ErrorCode::corrupt_file);
  CHECK_THROWS_AS(read_stream(scratch("does-not-exist.pts")), Error);
}

TEST_CASE("curve CSV round trip") {
  const auto s = simulate_poisson(2e6, ticks_from_seconds(0.1), {52, 0});
  const auto h = start_stop_first(s.events, s.duration, {delay_ns(5), delay_ns(200), delay_ns(5)});
  const auto c = normalize_g2(h, true);
  const auto text = format_curve_csv(c);
  CHECK(text.find("tau_ns,counts,g2,g2_err\n") != std::string::npos);
  const auto back = parse_curve_csv(text);
  CHECK(back.geometry == c.geometry);
  CHECK(back.mode == c.mode);
  CHECK(back.rate_corrected);
  CHECK(back.counts == c.counts);
  CHECK(back.tau_centers == c.tau_centers);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back.g2[i] == doctest::Approx(c.g2[i]).epsilon(1e-11));
    CHECK(back.scale[i] == doctest::Approx(c.scale[i]).epsilon(1e-11));
  }
  CHECK(format_curve_csv(back) == text);
  CHECK_THROWS_AS(parse_curve_csv("tau_ns,counts\n1,2\n"), Error);
}

TEST_CASE("fit reports are JSON with null for unknown errors") {
  FitResult f;
  f.model = {0.5, 3e7, 1e6};
  f.param_errors = {0.01, std::numeric_limits<double>::infinity(), 2.0};
  const auto text = format_fit_json(f);
  CHECK(text.find("null") != std::string::npos);
  CHECK(text.back() == '\n');
  LinearFit l{0.001, 1.0, 3.0, 0.0001, 0.01, 39};
  CHECK(format_linear_fit_json(l).find("\"slope_per_ns\"") != std::string::npos);
}

TEST_CASE("config: minimal document and defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(std::holds_alternative<PoissonSource>(cfg.source));
  CHECK(cfg.detectors.size() == 1);
  CHECK(cfg.detectors[0].params == DetectorParams::apd_paper());
  CHECK(cfg.duration == ticks_from_seconds(0.5));
  CHECK(cfg.seed.seed == 7);
  CHECK(cfg.correlation.geometry == HistogramGeometry{Delay(0), delay_ns(200), delay_ns(1)});
  CHECK(cfg.fit.model == FitModel::none);
}

TEST_CASE("config: errors name the line and the offending key") {
  std::string text = kMinimal;
  text.replace(text.find("\"seed\": 7"), 9, "\"seed\": -7");
  auto msg = config_error(text);
  CHECK(msg.find("cfg.json:6:") != std::string::npos);
  CHECK(msg.find("/seed") != std::string::npos);

  text = kMinimal;
  text.replace(text.find("\"apd-paper\""), 11, "\"pmt\"");
  msg = config_error(text);
  CHECK(msg.find("cfg.json:4:") != std::string::npos);
  CHECK(msg.find("/detectors/0/preset") != std::string::npos);

  text = kMinimal;
  text.replace(text.find("\"duration_s\""), 12, "\"duration_sec\"");
  msg = config_error(text);
  CHECK(msg.find("cfg.json:5:") != std::string::npos);

  msg = config_error("{\n  \"source\": {,\n}");
  CHECK(msg.find("cfg.json:2:") != std::string::npos);

  text = kMinimal;
  text.replace(text.find("\"single_detector\""), 17, "\"hbt\"");
  msg = config_error(text);
  CHECK(msg.find("/detectors") != std::string::npos);

  text = kMinimal;
  text.replace(text.find("\"bin_width_ns\": 1"), 17, "\"bin_width_ns\": 3");
  msg = config_error(text);
  CHECK(msg.find("/correlation") != std::string::npos);
}

TEST_CASE("config: file loading reports io errors") {
  try {
    load_config(scratch("missing.json"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
  const auto path = scratch("ok.json");
  write_text_file(path, kMinimal);
  CHECK(load_config(path).seed.seed == 7);
}
