#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "oamcorr/correlate.hpp"
#include "oamcorr/oracle.hpp"

namespace oamcorr::io {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Matrix CSV: header "l_t\l_r,<l_r values ascending>", then one row per l_t
// (ascending): "<l_t>,<values>".
std::string matrix_to_csv(const ModeMatrix& m);
ModeMatrix matrix_from_csv(std::string_view text);
void write_matrix_csv(const std::filesystem::path& path, const ModeMatrix& m);
ModeMatrix read_matrix_csv(const std::filesystem::path& path);

/// "<stem>.stderr.csv" and "<stem>.json" next to a matrix CSV.
std::filesystem::path stderr_path_for(const std::filesystem::path& matrix_csv);
std::filesystem::path sidecar_path_for(const std::filesystem::path& matrix_csv);

// Profile CSV: header "delta_l,value", one row per Δl ascending.
std::string profile_to_csv(const SignalProfile& p);
SignalProfile profile_from_csv(std::string_view text);
void write_profile_csv(const std::filesystem::path& path, const SignalProfile& p);
SignalProfile read_profile_csv(const std::filesystem::path& path);

/// Binary 8-bit PGM ("P5"): one pixel per entry, rows by descending l_t,
/// columns by ascending l_r, linear from min (0) to max (255). The range is
/// recorded in a "# min=<v> max=<v>" comment; a constant matrix is all zeros.
std::string matrix_to_pgm(const ModeMatrix& m);
void write_heatmap(const std::filesystem::path& path, const ModeMatrix& m);

}  // namespace oamcorr::io
