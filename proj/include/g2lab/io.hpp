#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "g2lab/correlation.hpp"
#include "g2lab/fitting.hpp"
#include "g2lab/stream.hpp"

namespace g2lab {

// PTS1 timestamp file, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "PTS1"
//   4       4     format version (u32) = 1
//   8       4     tick size in femtoseconds (u32) = 1000
//   12      1     kind: 0 = photon stream, 1 = click stream
//   13      1     detector id (click streams; 0 otherwise)
//   14      2     label length L in bytes (u16)
//   16      8     event count N (u64)
//   24      8     duration in ticks (u64)
//   32      L     label, UTF-8, no terminator
//   32+L    8N    events, u64 ticks, strictly increasing
//   ...     N     click streams only: one provenance byte per event
//                 (0 photon, 1 dark, 2 afterpulse)

inline constexpr std::uint32_t kPtsVersion = 1;
inline constexpr std::size_t kPtsHeaderSize = 32;

using AnyStream = std::variant<PhotonStream, ClickStream>;

std::string encode_stream(const AnyStream& stream);
/// Throws ErrorCode::corrupt_file on bad magic/version/tick size, truncation,
/// trailing bytes, unknown provenance, or a payload violating stream invariants.
AnyStream decode_stream(std::string_view bytes);

void write_stream(const std::filesystem::path& path, const AnyStream& stream);
AnyStream read_stream(const std::filesystem::path& path);

/// CSV with '#' metadata lines followed by "tau_ns,counts,g2,g2_err".
std::string format_curve_csv(const G2Curve& curve);
G2Curve parse_curve_csv(std::string_view text);

std::string format_fit_json(const FitResult& fit);
std::string format_linear_fit_json(const LinearFit& fit);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace g2lab
