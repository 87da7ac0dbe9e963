#include <fstream>

#include "londn/io.hpp"
#include "support.hpp"

using namespace londn;
using namespace londn::test;

namespace {

std::string bytes_of(const fs::path& p) { return read_file(p); }

std::string f32le(float v) {
  std::string s(4, '\0');
  std::memcpy(s.data(), &v, 4);
  return s;
}

void write_raw(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(ComplexIo, SinglePixelByteLayout) {
  TempDir dir("io");
  ComplexImage img(1, 1);
  img(0, 0) = {1.0, 2.0};
  write_complex(dir / "x", img);
  EXPECT_EQ(bytes_of(dir / "x.hdr"), "CPX1\n1 1 1\n");
  EXPECT_EQ(bytes_of(dir / "x.cpx"), f32le(1.0f) + f32le(2.0f));
}

TEST(ComplexIo, CoilMajorByteLayout) {
  TempDir dir("io");
  CoilStack k(2, 1, 1);
  k[0](0, 0) = 0.0;
  k[1](0, 0) = {0.0, 1.0};
  write_complex(dir / "k", k);
  EXPECT_EQ(bytes_of(dir / "k.hdr"), "CPX1\n2 1 1\n");
  EXPECT_EQ(bytes_of(dir / "k.cpx"), f32le(0) + f32le(0) + f32le(0) + f32le(1));
}

TEST(ComplexIo, RoundTripWithinFloatPrecision) {
  TempDir dir("io");
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = random_image(4, 4, rng);
    write_complex(dir / "r", img);
    const auto back = read_image(dir / "r");
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t k = 0; k < img.size(); ++k) {
      EXPECT_LE(std::abs(back[k].real() - img[k].real()), 1e-6 * std::max(1.0, std::abs(img[k].real())));
      EXPECT_LE(std::abs(back[k].imag() - img[k].imag()), 1e-6 * std::max(1.0, std::abs(img[k].imag())));
    }
  }
}

TEST(ComplexIo, MultiCoilRoundTrip) {
  TempDir dir("io");
  Rng rng(4);
  const auto y = random_kspace(3, 5, 2, rng);
  write_complex(dir / "y", y);
  const auto back = read_complex(dir / "y");
  ASSERT_EQ(back.ncoils(), 3u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LT(max_abs_diff(back[c], y[c]), 1e-5);
}

TEST(ComplexIo, MalformedInputsAreErrors) {
  TempDir dir("io");
  write_complex(dir / "a", ComplexImage(2, 2));
  write_raw(dir / "a.hdr", "CPX2\n1 2 2\n");
  EXPECT_THROW(read_complex(dir / "a"), IoError);
  write_raw(dir / "a.hdr", "CPX1\n1 two 2\n");
  EXPECT_THROW(read_complex(dir / "a"), IoError);
  write_raw(dir / "a.hdr", "CPX1\n1 2 3\n");
  EXPECT_THROW(read_complex(dir / "a"), IoError);  // byte count disagrees
  EXPECT_THROW(read_complex(dir / "missing"), IoError);
}

TEST(ComplexIo, ErrorsNameThePath) {
  TempDir dir("io");
  try {
    read_complex(dir / "nothing");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("nothing"), std::string::npos);
  }
}

TEST(MaskIo, AllOnesBytes) {
  TempDir dir("io");
  write_mask(dir / "m", SamplingMask::full(2, 2));
  const std::string b = bytes_of(dir / "m.msk");
  EXPECT_EQ(b, std::string("MSK1\n2 2 1 0\n") + std::string("\x01\x01\x01\x01", 4));
}

TEST(MaskIo, ColumnPatternBytes) {
  TempDir dir("io");
  write_mask(dir / "m", SamplingMask::from_columns(2, {1, 0}, 2.0, 1));
  const std::string b = bytes_of(dir / "m.msk");
  EXPECT_EQ(b.substr(b.size() - 4), std::string("\x01\x00\x01\x00", 4));
}

TEST(MaskIo, RoundTripRandomMasks) {
  TempDir dir("io");
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_mask(1 + rng.index(9), 1 + rng.index(9), rng);
    write_mask(dir / "m", m);
    EXPECT_EQ(read_mask(dir / "m"), m);
  }
}

TEST(MaskIo, NonBinaryByteRejected) {
  TempDir dir("io");
  write_raw(dir / "m.msk", std::string("MSK1\n1 2 2 0\n") + std::string("\x01\x02", 2));
  EXPECT_THROW(read_mask(dir / "m"), IoError);
}

TEST(AtomicWrite, LeavesNoTemporaryBehind) {
  TempDir dir("io");
  write_file_atomic(dir / "f.txt", "hello");
  EXPECT_EQ(bytes_of(dir / "f.txt"), "hello");
  EXPECT_FALSE(fs::exists(dir / "f.txt.tmp"));
}
