#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "oamcorr/io.hpp"

using namespace oamcorr;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("oamcorr_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Pgm {
  int width = 0;
  int height = 0;
  std::string comment;
  std::string pixels;
};

Pgm parse_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  Pgm p;
  std::string magic;
  std::getline(in, magic);
  CHECK(magic == "P5");
  std::getline(in, p.comment);
  int maxval = 0;
  in >> p.width >> p.height >> maxval;
  CHECK(maxval == 255);
  in.get();
  p.pixels.assign(std::istreambuf_iterator<char>(in), {});
  return p;
}

}  // namespace

TEST_CASE("doubles round trip at full precision") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = d(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(io::parse_double(io::format_double(x)) == x);
  }
  for (double x : {0.0, -0.0, 1.0 / 3.0, 5e-324, std::numeric_limits<double>::max(), 0.1}) {
    CHECK(io::parse_double(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK_THROWS(io::parse_double("1.5x"));
  CHECK_THROWS(io::parse_double(""));
}

TEST_CASE("matrix CSV round trip") {
  ModeMatrix m(ModeWindow{3});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(1.0, 0.3);
  for (double& v : m.values()) v = d(rng);
  const auto text = io::matrix_to_csv(m);
  CHECK(text.rfind("l_t\\l_r,-3,-2,-1,0,1,2,3\n", 0) == 0);
  CHECK(text.find("\n-3,") != std::string::npos);
  CHECK(io::matrix_from_csv(text) == m);

  const auto dir = scratch_dir("matrix");
  io::write_matrix_csv(dir / "m.csv", m);
  CHECK(io::read_matrix_csv(dir / "m.csv") == m);
  CHECK(io::stderr_path_for(dir / "m.csv") == dir / "m.stderr.csv");
  CHECK(io::sidecar_path_for(dir / "m.csv") == dir / "m.json");
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    CHECK(entry.path().filename() == "m.csv");
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed matrix CSV is rejected") {
  CHECK_THROWS(io::matrix_from_csv(""));
  CHECK_THROWS(io::matrix_from_csv("l_t\\l_r,-1,0,1\n-1,1,2,3\n0,1,2\n1,1,2,3\n"));
  CHECK_THROWS(io::matrix_from_csv("l_t\\l_r,-1,0,1\n-1,1,2,3\n0,1,2,3\n"));
  CHECK_THROWS(io::matrix_from_csv("l_t\\l_r,-1,0,1\n-1,1,2,3\n0,1,abc,3\n1,1,2,3\n"));
  CHECK_THROWS(io::matrix_from_csv("l_t\\l_r,0,1,2\n0,1,2,3\n1,1,2,3\n2,1,2,3\n"));
}

TEST_CASE("profile CSV round trip") {
  SignalProfile p{2, {0.1, 0.25, 1.0, 1.0 / 3.0, 0.0}, true};
  const auto text = io::profile_to_csv(p);
  CHECK(text.rfind("delta_l,value\n-2,0.1\n", 0) == 0);
  const auto back = io::profile_from_csv(text);
  CHECK(back.dl_max == 2);
  CHECK(back.values == p.values);
  CHECK_THROWS(io::profile_from_csv("delta_l,value\n-1,0.5\n1,0.5\n"));
}

TEST_CASE("heatmap scaling endpoints") {
  ModeMatrix m(ModeWindow{1});
  for (int i = 0; i < 9; ++i) m.values()[static_cast<std::size_t>(i)] = 1.0 + i;
  const auto img = parse_pgm(io::matrix_to_pgm(m));
  CHECK(img.width == 3);
  CHECK(img.height == 3);
  CHECK(img.comment.find("min=1") != std::string::npos);
  CHECK(img.comment.find("max=9") != std::string::npos);
  REQUIRE(img.pixels.size() == 9u);
  const auto px = [&](int row, int col) { return static_cast<unsigned char>(img.pixels[static_cast<std::size_t>(row * 3 + col)]); };
  // Top row is the largest l_t; m(1, 1) = 9 is the maximum.
  CHECK(px(0, 2) == 255);
  CHECK(px(2, 0) == 0);
  CHECK(px(1, 1) == 128);
}

TEST_CASE("constant heatmap is all zeros") {
  const auto img = parse_pgm(io::matrix_to_pgm(ModeMatrix(ModeWindow{2}, 1.5)));
  REQUIRE(img.pixels.size() == 25u);
  for (char c : img.pixels) CHECK(c == 0);
}

TEST_CASE("atomic write replaces the target") {
  const auto dir = scratch_dir("atomic");
  io::write_file_atomic(dir / "a.txt", "first");
  io::write_file_atomic(dir / "a.txt", "second");
  std::ifstream in(dir / "a.txt");
  std::string s;
  std::getline(in, s);
  CHECK(s == "second");
  CHECK(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator{}) == 1);
  CHECK_THROWS(io::write_file_atomic(dir / "a.txt" / "b.txt", "x"));
  std::filesystem::remove_all(dir);
}
