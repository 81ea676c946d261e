#include "oamcorr/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oamcorr::io {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

int parse_int(std::string_view text) {
  text = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error("malformed integer '" + std::string(text) + "'");
  }
  return value;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("cannot format double");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error("malformed number '" + std::string(text) + "'");
  }
  return value;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string matrix_to_csv(const ModeMatrix& m) {
  const int lm = m.l_max();
  std::string out = "l_t\\l_r";
  for (int lr = -lm; lr <= lm; ++lr) out += "," + std::to_string(lr);
  out += "\n";
  for (int lt = -lm; lt <= lm; ++lt) {
    out += std::to_string(lt);
    for (int lr = -lm; lr <= lm; ++lr) out += "," + format_double(m(lt, lr));
    out += "\n";
  }
  return out;
}

ModeMatrix matrix_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw std::runtime_error("matrix CSV is empty");
  const auto header = split(lines[0], ',');
  if (header.size() < 2) throw std::runtime_error("matrix CSV header needs l_r columns");
  const int n = static_cast<int>(header.size()) - 1;
  if (n % 2 == 0) throw std::runtime_error("matrix CSV must have an odd number of l_r columns");
  const ModeWindow window{(n - 1) / 2};
  for (int c = 0; c < n; ++c) {
    if (parse_int(header[static_cast<std::size_t>(c + 1)]) != c - window.l_max) {
      throw std::runtime_error("matrix CSV header must list l_r = -l_max..l_max ascending");
    }
  }
  if (static_cast<int>(lines.size()) != n + 1) {
    throw std::runtime_error("matrix CSV has " + std::to_string(lines.size() - 1) + " rows, expected " + std::to_string(n));
  }
  ModeMatrix m(window);
  for (int r = 0; r < n; ++r) {
    const auto cells = split(lines[static_cast<std::size_t>(r + 1)], ',');
    if (static_cast<int>(cells.size()) != n + 1) {
      throw std::runtime_error("matrix CSV row " + std::to_string(r + 1) + " has the wrong number of columns");
    }
    const int lt = parse_int(cells[0]);
    if (lt != r - window.l_max) throw std::runtime_error("matrix CSV rows must list l_t ascending");
    for (int c = 0; c < n; ++c) m(lt, c - window.l_max) = parse_double(cells[static_cast<std::size_t>(c + 1)]);
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const ModeMatrix& m) { write_file_atomic(path, matrix_to_csv(m)); }

ModeMatrix read_matrix_csv(const std::filesystem::path& path) {
  try {
    return matrix_from_csv(read_text(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::filesystem::path stderr_path_for(const std::filesystem::path& matrix_csv) {
  std::filesystem::path p = matrix_csv;
  return p.replace_extension(".stderr.csv");
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& matrix_csv) {
  std::filesystem::path p = matrix_csv;
  return p.replace_extension(".json");
}

std::string profile_to_csv(const SignalProfile& p) {
  std::string out = "delta_l,value\n";
  for (int dl = -p.dl_max; dl <= p.dl_max; ++dl) out += std::to_string(dl) + "," + format_double(p.at(dl)) + "\n";
  return out;
}

SignalProfile profile_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw std::runtime_error("profile CSV needs a header and at least one row");
  const int n = static_cast<int>(lines.size()) - 1;
  if (n % 2 == 0) throw std::runtime_error("profile CSV must cover a symmetric Δl window");
  SignalProfile p{(n - 1) / 2, std::vector<double>(static_cast<std::size_t>(n)), false};
  for (int i = 0; i < n; ++i) {
    const auto cells = split(lines[static_cast<std::size_t>(i + 1)], ',');
    if (cells.size() != 2) throw std::runtime_error("profile CSV rows must be 'delta_l,value'");
    if (parse_int(cells[0]) != i - p.dl_max) throw std::runtime_error("profile CSV must list Δl ascending from -dl_max");
    p.values[static_cast<std::size_t>(i)] = parse_double(cells[1]);
  }
  return p;
}

void write_profile_csv(const std::filesystem::path& path, const SignalProfile& p) {
  write_file_atomic(path, profile_to_csv(p));
}

SignalProfile read_profile_csv(const std::filesystem::path& path) {
  try {
    return profile_from_csv(read_text(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string matrix_to_pgm(const ModeMatrix& m) {
  const auto values = m.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const int n = m.window().size();
  const int lm = m.l_max();

  std::string out = "P5\n# min=" + format_double(lo) + " max=" + format_double(hi) + "\n" + std::to_string(n) + " " +
                    std::to_string(n) + "\n255\n";
  const double range = hi - lo;
  for (int lt = lm; lt >= -lm; --lt) {
    for (int lr = -lm; lr <= lm; ++lr) {
      int level = 0;
      if (range > 0.0) level = static_cast<int>(std::lround((m(lt, lr) - lo) / range * 255.0));
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0, 255))));
    }
  }
  return out;
}

void write_heatmap(const std::filesystem::path& path, const ModeMatrix& m) { write_file_atomic(path, matrix_to_pgm(m)); }

}  // namespace oamcorr::io
