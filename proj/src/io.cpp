#include "g2lab/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"

namespace g2lab {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>(static_cast<std::uint64_t>(value) >> (8 * i) & 0xFF));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return static_cast<T>(v);
}

[[noreturn]] void corrupt(const std::string& what) {
  fail(ErrorCode::corrupt_file, "corrupt PTS1 data: " + what);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string encode_stream(const AnyStream& stream) {
  const bool clicks = std::holds_alternative<ClickStream>(stream);
  const auto& events = clicks ? std::get<ClickStream>(stream).events
                              : std::get<PhotonStream>(stream).events;
  const Tick duration = clicks ? std::get<ClickStream>(stream).duration
                               : std::get<PhotonStream>(stream).duration;
  const std::string label = clicks ? std::string() : std::get<PhotonStream>(stream).label;
  if (label.size() > 0xFFFF) fail(ErrorCode::invalid_argument, "stream label longer than 65535 bytes");

  std::string out;
  out.reserve(kPtsHeaderSize + label.size() + events.size() * (clicks ? 9 : 8));
  out.append("PTS1");
  put_le<std::uint32_t>(out, kPtsVersion);
  put_le<std::uint32_t>(out, kTickFemtoseconds);
  put_le<std::uint8_t>(out, clicks ? 1 : 0);
  put_le<std::uint8_t>(out, clicks ? std::get<ClickStream>(stream).detector_id : 0);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(label.size()));
  put_le<std::uint64_t>(out, events.size());
  put_le<std::uint64_t>(out, duration.value());
  out.append(label);
  for (Tick t : events) put_le<std::uint64_t>(out, t.value());
  if (clicks)
    for (ClickOrigin o : std::get<ClickStream>(stream).provenance)
      out.push_back(static_cast<char>(o));
  return out;
}

AnyStream decode_stream(std::string_view bytes) {
  if (bytes.size() < kPtsHeaderSize) corrupt("truncated header");
  if (bytes.substr(0, 4) != "PTS1") corrupt("bad magic");
  if (get_le<std::uint32_t>(bytes, 4) != kPtsVersion) corrupt("unsupported format version");
  if (get_le<std::uint32_t>(bytes, 8) != kTickFemtoseconds) corrupt("unsupported tick size");
  const auto kind = get_le<std::uint8_t>(bytes, 12);
  if (kind > 1) corrupt("unknown stream kind");
  const bool clicks = kind == 1;
  const auto detector_id = get_le<std::uint8_t>(bytes, 13);
  const auto label_len = get_le<std::uint16_t>(bytes, 14);
  const auto count = get_le<std::uint64_t>(bytes, 16);
  const Tick duration(get_le<std::uint64_t>(bytes, 24));

  const std::size_t per_event = clicks ? 9 : 8;
  const std::size_t payload = bytes.size() - kPtsHeaderSize;
  if (label_len > payload || count > (payload - label_len) / per_event) corrupt("truncated payload");
  if (payload != label_len + count * per_event) corrupt("trailing bytes after payload");

  std::vector<Tick> events(count);
  std::size_t offset = kPtsHeaderSize + label_len;
  for (auto& t : events) {
    t = Tick(get_le<std::uint64_t>(bytes, offset));
    offset += 8;
  }
  if (auto v = validate_stream(events, duration)) corrupt(describe(*v));

  if (!clicks)
    return PhotonStream{std::move(events), duration,
                        std::string(bytes.substr(kPtsHeaderSize, label_len))};
  ClickStream c{std::move(events), {}, duration, detector_id};
  c.provenance.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto tag = static_cast<unsigned char>(bytes[offset + i]);
    if (tag > 2) corrupt("unknown provenance tag");
    c.provenance.push_back(static_cast<ClickOrigin>(tag));
  }
  return c;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::io, "read error on " + path.string());
  return data;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::io, "write error on " + path.string());
}

void write_stream(const std::filesystem::path& path, const AnyStream& stream) {
  write_text_file(path, encode_stream(stream));
}

AnyStream read_stream(const std::filesystem::path& path) {
  return decode_stream(read_text_file(path));
}

std::string format_curve_csv(const G2Curve& c) {
  std::ostringstream out;
  out << "# mode=" << to_string(c.mode) << '\n';
  out << "# tau_min_ps=" << c.geometry.tau_min.value() << '\n';
  out << "# tau_max_ps=" << c.geometry.tau_max.value() << '\n';
  out << "# bin_width_ps=" << c.geometry.bin_width.value() << '\n';
  out << "# n_start_events=" << c.n_start_events << '\n';
  out << "# stop_rate_hz=" << format_double(c.stop_rate_hz) << '\n';
  out << "# rate_corrected=" << (c.rate_corrected ? 1 : 0) << '\n';
  out << "tau_ns,counts,g2,g2_err\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    char tau[32];
    std::snprintf(tau, sizeof tau, "%.4f", c.tau_ns(i));
    out << tau << ',' << c.counts[i] << ',' << format_double(c.g2[i]) << ','
        << format_double(c.g2_err[i]) << '\n';
  }
  return out.str();
}

G2Curve parse_curve_csv(std::string_view text) {
  std::map<std::string, std::string> meta;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header_seen = false;
  std::vector<std::uint64_t> counts;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& what) {
    fail(ErrorCode::corrupt_file, "curve CSV line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!header_seen) {
      if (line != "tau_ns,counts,g2,g2_err") bad("expected header tau_ns,counts,g2,g2_err");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) bad("expected 4 columns");
    try {
      std::size_t used = 0;
      counts.push_back(std::stoull(cells[1], &used));
      if (used != cells[1].size()) bad("malformed count");
    } catch (const std::logic_error&) {
      bad("malformed count");
    }
  }
  const char* required[] = {"mode", "tau_min_ps", "tau_max_ps", "bin_width_ps",
                            "n_start_events", "stop_rate_hz", "rate_corrected"};
  for (const char* key : required)
    if (!meta.count(key)) fail(ErrorCode::corrupt_file, std::string("curve CSV missing metadata ") + key);
  const auto mode = parse_correlation_mode(meta["mode"]);
  if (!mode) fail(ErrorCode::corrupt_file, "curve CSV has unknown mode " + meta["mode"]);

  // Rebuild the exact normalization from the metadata.
  G2Curve c;
  try {
    c.geometry = {Delay(std::stoll(meta["tau_min_ps"])), Delay(std::stoll(meta["tau_max_ps"])),
                  Delay(std::stoll(meta["bin_width_ps"]))};
    c.n_start_events = std::stoull(meta["n_start_events"]);
    c.stop_rate_hz = std::stod(meta["stop_rate_hz"]);
  } catch (const std::logic_error&) {
    fail(ErrorCode::corrupt_file, "curve CSV has malformed metadata");
  }
  c.geometry.validate();
  if (counts.size() != c.geometry.bins())
    fail(ErrorCode::corrupt_file, "curve CSV row count does not match its geometry");
  if (c.n_start_events == 0 || !(c.stop_rate_hz > 0.0))
    fail(ErrorCode::corrupt_file, "curve CSV has zero normalization");
  c.mode = *mode;
  c.rate_corrected = meta["rate_corrected"] == "1";
  c.counts = std::move(counts);
  const double bin_s = static_cast<double>(c.geometry.bin_width.value()) * 1e-12;
  const double base = 1.0 / (static_cast<double>(c.n_start_events) * c.stop_rate_hz * bin_s);
  for (std::size_t i = 0; i < c.counts.size(); ++i) {
    c.tau_centers.push_back(c.geometry.bin_center(i));
    double s = base;
    if (c.rate_corrected) s *= std::exp(c.stop_rate_hz * c.tau_ns(i) * 1e-9);
    const auto k = static_cast<double>(c.counts[i]);
    c.scale.push_back(s);
    c.g2.push_back(k * s);
    c.g2_err.push_back(std::sqrt(k) * s);
  }
  return c;
}

std::string format_fit_json(const FitResult& fit) {
  nlohmann::ordered_json j;
  j["model"] = "g2_two_exponential";
  j["a"] = fit.model.a;
  j["lambda1_hz"] = fit.model.lambda1;
  j["lambda2_hz"] = fit.model.lambda2;
  j["a_err"] = std::isfinite(fit.param_errors[0]) ? nlohmann::ordered_json(fit.param_errors[0]) : nullptr;
  j["lambda1_err_hz"] = std::isfinite(fit.param_errors[1]) ? nlohmann::ordered_json(fit.param_errors[1]) : nullptr;
  j["lambda2_err_hz"] = std::isfinite(fit.param_errors[2]) ? nlohmann::ordered_json(fit.param_errors[2]) : nullptr;
  j["residual_sum"] = fit.residual_sum;
  j["n_points"] = fit.n_points;
  j["n_iterations"] = fit.n_iterations;
  j["converged"] = fit.converged;
  return j.dump(2) + "\n";
}

std::string format_linear_fit_json(const LinearFit& fit) {
  nlohmann::ordered_json j;
  j["model"] = "linear";
  j["slope_per_ns"] = fit.slope_per_ns;
  j["slope_err_per_ns"] = fit.slope_err;
  j["intercept"] = fit.intercept;
  j["intercept_err"] = fit.intercept_err;
  j["residual_sum"] = fit.residual_sum;
  j["n_points"] = fit.n_points;
  return j.dump(2) + "\n";
}

}  // namespace g2lab
