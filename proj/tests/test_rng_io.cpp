#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mf/io.hpp"
#include "mf/rng.hpp"
#include "mf/tensor.hpp"

TEST_SUITE("rng_io") {

TEST_CASE("splitmix64 reference values") {
  // First outputs for state 0, as published with the reference C code.
  std::uint64_t s = 0;
  CHECK(mf::splitmix64(s) == 0xe220a8397b1dcdafULL);
  CHECK(mf::splitmix64(s) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("streams are reproducible and seed-sensitive") {
  mf::Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next();
    CHECK(va == b.next());
    (void)c.next();
  }
  CHECK(mf::Rng(42).next() != mf::Rng(43).next());
  CHECK(mf::Rng::derive(7, 0).next() != mf::Rng::derive(7, 1).next());
}

TEST_CASE("uniform and normal moments") {
  mf::Rng rng(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform_int covers its range") {
  mf::Rng rng(3);
  int hits[5] = {};
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.uniform_int(2, 6);
    REQUIRE(v >= 2);
    REQUIRE(v <= 6);
    ++hits[v - 2];
  }
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("tensor arithmetic and shape checks") {
  mf::ImageTensor a(2, 3, 4, 1.0), b(2, 3, 4, 2.0);
  CHECK(a.size() == 24);
  mf::ImageTensor c = mf::lincomb(2.0, a, -1.0, b);
  CHECK(mf::max_abs_diff(c, mf::ImageTensor(2, 3, 4, 0.0)) == 0.0);
  CHECK_THROWS_AS(a += mf::ImageTensor(1, 3, 4), std::invalid_argument);
  mf::ImageTensor cat = mf::concat_channels(a, b);
  CHECK(cat.channels() == 4);
  CHECK(cat.at(3, 2, 3) == 2.0);
  a.at(0, 0, 0) = NAN;
  CHECK_FALSE(a.all_finite());
  CHECK_THROWS_AS(mf::require_finite(a, "test"), mf::NumericError);
}

TEST_CASE("netpbm and raw tensor roundtrip") {
  const auto dir = std::filesystem::temp_directory_path() / "mf_io_test";
  std::filesystem::create_directories(dir);
  mf::Rng rng(5);
  mf::ImageTensor x = mf::gaussian_noise({3, 5, 7}, rng);
  mf::write_mft(x, dir / "x.mft");
  mf::ImageTensor y = mf::read_mft(dir / "x.mft");
  CHECK(y.shape() == x.shape());
  CHECK(mf::max_abs_diff(x, y) < 1e-6);

  mf::ImageTensor g(1, 2, 3);
  g.at(0, 0, 0) = -1.0;
  g.at(0, 0, 1) = 1.0;
  g.at(0, 1, 2) = 0.5;
  mf::write_netpbm(g, dir / "g.pgm");
  const std::string raw = mf::read_text(dir / "g.pgm");
  CHECK(raw.rfind("P5\n3 2\n255\n", 0) == 0);
  CHECK(static_cast<unsigned char>(raw[raw.size() - 6]) == 0);
  CHECK(static_cast<unsigned char>(raw[raw.size() - 5]) == 255);
  CHECK(static_cast<unsigned char>(raw[raw.size() - 1]) == 191);  // round(1.5 * 127.5)
  mf::ImageTensor back = mf::read_netpbm(dir / "g.pgm");
  CHECK(back.shape() == g.shape());
  CHECK(std::abs(back.at(0, 0, 1) - 1.0) < 1e-12);

  mf::write_netpbm(mf::gaussian_noise({3, 4, 4}, rng), dir / "c.ppm");
  CHECK(mf::read_netpbm(dir / "c.ppm").channels() == 3);
  CHECK_THROWS_AS(mf::read_mft(dir / "missing.mft"), mf::IoError);
  std::filesystem::remove_all(dir);
}

}
