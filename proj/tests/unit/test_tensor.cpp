#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adjseg/activation.hpp"
#include "adjseg/conv.hpp"
#include "adjseg/errors.hpp"
#include "adjseg/io.hpp"
#include "adjseg/tensor.hpp"
#include "oracles.hpp"

using namespace adjseg;

TEST(FeatureField, ShapeAndLayout) {
  FeatureField f(2, 3, 4);
  EXPECT_EQ(f.size(), 24u);
  f.at(1, 2, 3) = 5.0;
  EXPECT_EQ(f.values()[(1 * 3 + 2) * 4 + 3], 5.0);
  EXPECT_EQ(f.plane(1)[2 * 4 + 3], 5.0);
  EXPECT_THROW(FeatureField(1, 2, 2, std::vector<double>(3)), DimensionError);
}

TEST(FeatureField, Arithmetic) {
  const FeatureField a = oracle::random_field(2, 3, 3, 1), b = oracle::random_field(2, 3, 3, 2);
  const FeatureField s = a + b, d = a - b, h = hadamard(a, b), m = 2.0 * a;
  double ip = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(s.values()[k], a.values()[k] + b.values()[k]);
    EXPECT_EQ(d.values()[k], a.values()[k] - b.values()[k]);
    EXPECT_EQ(h.values()[k], a.values()[k] * b.values()[k]);
    EXPECT_EQ(m.values()[k], 2.0 * a.values()[k]);
    ip += a.values()[k] * b.values()[k];
  }
  EXPECT_NEAR(inner(a, b), ip, 1e-12);
  EXPECT_THROW(a + FeatureField(1, 3, 3), DimensionError);
}

TEST(FeatureField, FiniteCheck) {
  FeatureField f(1, 2, 2, 1.0);
  EXPECT_TRUE(f.all_finite());
  f.at(0, 1, 1) = std::nan("");
  EXPECT_FALSE(f.all_finite());
}

TEST(ConvKernelStack, RejectsEvenExtent) { EXPECT_THROW(ConvKernelStack(1, 1, 2, 3), DimensionError); }

TEST(Conv2d, DiracIsIdentity) {
  ConvKernelStack k(1, 1, 3, 3);
  k.at(0, 0, 1, 1) = 1.0;
  const FeatureField x = oracle::random_field(1, 3, 3, 7);
  EXPECT_EQ(conv2d(x, k), x);
  EXPECT_EQ(conv2d_adjoint_input(x, k), x);
}

TEST(Conv2d, ZeroKernelGivesZero) {
  const FeatureField x = oracle::random_field(3, 5, 4, 8);
  const ConvKernelStack k(2, 3, 3, 3);
  EXPECT_EQ(conv2d(x, k), FeatureField(2, 5, 4));
  EXPECT_EQ(conv2d_adjoint_input(FeatureField(2, 5, 4, 1.0), k), FeatureField(3, 5, 4));
}

TEST(Conv2d, OnesKernelOnTwoByTwo) {
  const FeatureField x(1, 2, 2, std::vector<double>{1, 2, 3, 4});
  const ConvKernelStack k(1, 1, 3, 3, 1.0);
  const FeatureField y = conv2d(x, k);
  EXPECT_EQ(y, oracle::conv(x, k));
  // every 3x3 window around a pixel of a 2x2 field covers all four pixels
  for (double v : y.values()) EXPECT_EQ(v, 10.0);
}

TEST(Conv2d, MatchesDirectSummation) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t kh = 1 + 2 * (s % 3), kw = 1 + 2 * ((s / 3) % 2);
    const FeatureField x = oracle::random_field(1 + s % 3, 3 + s % 5, 2 + s % 4, s);
    const ConvKernelStack k = oracle::random_kernel(1 + s % 2, x.channels(), kh, kw, 100 + s);
    EXPECT_LT(oracle::max_abs_diff(conv2d(x, k), oracle::conv(x, k)), 1e-12) << "seed " << s;
  }
}

TEST(Conv2d, IntegerInputsAreExact) {
  FeatureField x(2, 4, 5);
  for (std::size_t k = 0; k < x.size(); ++k) x.values()[k] = static_cast<double>(static_cast<int>(k % 7) - 3);
  ConvKernelStack w(3, 2, 3, 3);
  for (std::size_t k = 0; k < w.size(); ++k) w.weights()[k] = static_cast<double>(static_cast<int>(k % 5) - 2);
  EXPECT_EQ(conv2d(x, w), oracle::conv(x, w));
}

TEST(Conv2d, ChannelMismatchThrows) {
  EXPECT_THROW(conv2d(FeatureField(2, 3, 3), ConvKernelStack(1, 3, 3, 3)), DimensionError);
  EXPECT_THROW(conv2d_adjoint_input(FeatureField(2, 3, 3), ConvKernelStack(1, 2, 3, 3)), DimensionError);
  EXPECT_THROW(conv2d_adjoint_weights(FeatureField(1, 3, 3), FeatureField(1, 3, 3), ConvKernelStack(1, 2, 3, 3)),
               DimensionError);
}

TEST(Conv2d, Linearity) {
  const ConvKernelStack k = oracle::random_kernel(3, 2, 3, 3, 5);
  const FeatureField u = oracle::random_field(2, 6, 5, 1), v = oracle::random_field(2, 6, 5, 2);
  const double a = 0.7, b = -1.3;
  const FeatureField lhs = conv2d(a * u + b * v, k);
  const FeatureField rhs = a * conv2d(u, k) + b * conv2d(v, k);
  EXPECT_LT(oracle::max_abs_diff(lhs, rhs), 1e-12);
}

TEST(Conv2dAdjoint, InnerProductIdentityInput) {
  for (std::uint64_t s = 0; s < 120; ++s) {
    const std::size_t kh = 1 + 2 * (s % 3), kw = 1 + 2 * ((s + 1) % 3);
    const std::size_t in = 1 + s % 3, out = 1 + (s / 3) % 3, h = 2 + s % 6, w = 2 + (s / 2) % 5;
    const ConvKernelStack k = oracle::random_kernel(out, in, kh, kw, s);
    const FeatureField v = oracle::random_field(in, h, w, 1000 + s), u = oracle::random_field(out, h, w, 2000 + s);
    const double lhs = inner(conv2d(v, k), u), rhs = inner(v, conv2d_adjoint_input(u, k));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs))) << "seed " << s;
  }
}

TEST(Conv2dAdjoint, InnerProductIdentityWeights) {
  for (std::uint64_t s = 0; s < 120; ++s) {
    const std::size_t kh = 1 + 2 * (s % 3), kw = 1 + 2 * ((s + 2) % 3);
    const std::size_t in = 1 + s % 3, out = 1 + (s / 3) % 3, h = 2 + s % 6, w = 2 + (s / 2) % 5;
    const FeatureField x = oracle::random_field(in, h, w, 3000 + s), u = oracle::random_field(out, h, w, 4000 + s);
    const ConvKernelStack dk = oracle::random_kernel(out, in, kh, kw, 5000 + s);
    const ConvKernelStack g = conv2d_adjoint_weights(u, x, dk);
    const double lhs = inner(conv2d(x, dk), u), rhs = inner(dk.weights(), g.weights());
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs))) << "seed " << s;
  }
}

TEST(Conv2dAdjoint, WeightsMatchFiniteDifferences) {
  const FeatureField x = oracle::random_field(1, 4, 4, 11), u = oracle::random_field(1, 4, 4, 12);
  ConvKernelStack k = oracle::random_kernel(1, 1, 3, 3, 13);
  const ConvKernelStack g = conv2d_adjoint_weights(u, x, k);
  const double e = 1e-6;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double saved = k.weights()[i];
    k.weights()[i] = saved + e;
    const double up = inner(conv2d(x, k), u);
    k.weights()[i] = saved - e;
    const double down = inner(conv2d(x, k), u);
    k.weights()[i] = saved;
    EXPECT_LT(oracle::rel_err(g.weights()[i], (up - down) / (2 * e)), 1e-7) << i;
  }
}

TEST(Conv2dAdjoint, ZeroCotangentOrInput) {
  const ConvKernelStack shape(2, 3, 3, 3);
  const FeatureField x = oracle::random_field(3, 4, 4, 1);
  EXPECT_EQ(conv2d_adjoint_weights(FeatureField(2, 4, 4), x, shape), shape.zeros_like());
  EXPECT_EQ(conv2d_adjoint_weights(oracle::random_field(2, 4, 4, 2), FeatureField(3, 4, 4), shape),
            shape.zeros_like());
}

TEST(Conv2d, Deterministic) {
  const FeatureField x = oracle::random_field(8, 16, 16, 3);
  const ConvKernelStack k = oracle::random_kernel(8, 8, 3, 3, 4);
  EXPECT_EQ(conv2d(x, k), conv2d(x, k));
}

TEST(Activation, ReluNegativeIsZero) {
  const FeatureField x(1, 2, 3, -0.5);
  EXPECT_EQ(activate(x, Activation::ReLU), FeatureField(1, 2, 3));
  EXPECT_EQ(activate_deriv(x, Activation::ReLU), FeatureField(1, 2, 3));
  EXPECT_EQ(activate_deriv(0.0, Activation::ReLU), 0.0);
}

TEST(Activation, TanhValues) {
  EXPECT_EQ(activate(0.0, Activation::Tanh), 0.0);
  EXPECT_EQ(activate_deriv(0.0, Activation::Tanh), 1.0);
  EXPECT_NEAR(activate(1.0, Activation::Tanh), 0.7615941559557649, 1e-15);
  EXPECT_NEAR(activate_deriv(1.0, Activation::Tanh), 0.41997434161402614, 1e-15);
  EXPECT_NEAR(activate(-1.0, Activation::Tanh), -0.7615941559557649, 1e-15);
}

TEST(Activation, TanhTracksStd) {
  for (double x = -20.0; x <= 20.0; x += 0.01) EXPECT_NEAR(activate(x, Activation::Tanh), std::tanh(x), 5e-16);
  EXPECT_EQ(activate(800.0, Activation::Tanh), 1.0);
  EXPECT_EQ(activate(-800.0, Activation::Tanh), -1.0);
}

TEST(Activation, Parse) {
  EXPECT_EQ(parse_activation("ReLU"), Activation::ReLU);
  EXPECT_EQ(parse_activation("tanh"), Activation::Tanh);
  EXPECT_THROW(parse_activation("sigmoid"), ConfigError);
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("adjseg_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

using Ftf = TempDir;

TEST_F(Ftf, RoundTripIsBitwise) {
  const FeatureField f = oracle::random_field(3, 4, 5, 9);
  write_ftf(dir_ / "f.ftf", f);
  EXPECT_EQ(read_ftf(dir_ / "f.ftf"), f);
  EXPECT_EQ(std::filesystem::file_size(dir_ / "f.ftf"), 4 + 3 * 8 + f.size() * 8);
}

TEST_F(Ftf, HeaderLayout) {
  write_ftf(dir_ / "f.ftf", FeatureField(2, 1, 1, std::vector<double>{1.0, -2.0}));
  std::ifstream in(dir_ / "f.ftf", std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "FTF1");
  unsigned char dim[8];
  in.read(reinterpret_cast<char*>(dim), 8);
  EXPECT_EQ(dim[0], 2);
  for (int b = 1; b < 8; ++b) EXPECT_EQ(dim[b], 0);
}

TEST_F(Ftf, RejectsBadMagicAndTruncation) {
  {
    std::ofstream out(dir_ / "bad.ftf", std::ios::binary);
    out << "NOPE";
  }
  EXPECT_THROW(read_ftf(dir_ / "bad.ftf"), ConfigError);
  write_ftf(dir_ / "f.ftf", oracle::random_field(1, 3, 3, 1));
  std::filesystem::resize_file(dir_ / "f.ftf", 40);
  EXPECT_THROW(read_ftf(dir_ / "f.ftf"), ConfigError);
  EXPECT_THROW(read_ftf(dir_ / "missing.ftf"), ConfigError);
}

TEST_F(Ftf, KernelRoundTrip) {
  const ConvKernelStack k = oracle::random_kernel(3, 2, 3, 1, 4);
  write_kernel(dir_ / "k.ftf", k);
  EXPECT_EQ(read_kernel(dir_ / "k.ftf", 3), k);
  EXPECT_THROW(read_kernel(dir_ / "k.ftf", 4), ConfigError);
}
