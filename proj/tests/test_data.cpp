// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "surgdepth/config.hpp"
#include "surgdepth/data.hpp"
#include "surgdepth/errors.hpp"
#include "surgdepth/netpbm.hpp"

namespace surgdepth {
namespace {

class DataDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("surgdepth_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

std::array<int, 256> histogram(const LabelMask& m) {
  std::array<int, 256> h{};
  for (auto v : m.values) ++h[v];
  return h;
}

TEST(Generator, DeterministicInSeed) {
  SceneSpec spec;
  spec.seed = 7;
  const auto a = generate_dataset(spec, 3, 32, 32), b = generate_dataset(spec, 3, 32, 32);
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(same(a[i].rgb, b[i].rgb));
    EXPECT_TRUE(same(a[i].depth, b[i].depth));
    EXPECT_EQ(a[i].label, b[i].label);
  }
  spec.seed = 8;
  EXPECT_FALSE(same(generate_dataset(spec, 1, 32, 32)[0].rgb, a[0].rgb));
}

TEST(Generator, LabelsInRangeAndDepthLayersFlat) {
  SceneSpec spec;
  spec.layer_noise = 0.01;
  for (int i = 0; i < 6; ++i) {
    const GeneratedScene s = generate_scene(spec, i, 48, 40);
    for (auto v : s.sample.label.values) EXPECT_TRUE(v < spec.num_classes || v == kIgnoreLabel);
    std::map<int, std::pair<double, double>> range;
    for (std::size_t p = 0; p < s.region_of_pixel.size(); ++p) {
      const double d = s.sample.depth.data()[p];
      auto [it, fresh] = range.try_emplace(s.region_of_pixel[p], d, d);
      it->second.first = std::min(it->second.first, d);
      it->second.second = std::max(it->second.second, d);
    }
    for (const auto& [region, r] : range) EXPECT_LE(r.second - r.first, 2 * spec.layer_noise) << "region " << region;
  }
}

TEST(Generator, ZeroCouplingLabelsFollowColor) {
  SceneSpec spec;
  spec.depth_coupling = 0.0;
  EXPECT_EQ(rgb_ambiguous_fraction(generate_dataset(spec, 8, 32, 32)), 0.0);
}

TEST(Generator, FullCouplingIsRgbAmbiguous) {
  SceneSpec spec;
  spec.depth_coupling = 1.0;
  EXPECT_GT(rgb_ambiguous_fraction(generate_dataset(spec, 8, 64, 64)), 0.2);
}

TEST(Generator, RejectsBadSpec) {
  SceneSpec spec;
  spec.depth_coupling = 1.5;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = SceneSpec{};
  spec.snap = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Augment, FlipIsInvolutionAndKeepsHistogram) {
  const RgbdSample s = generate_dataset(SceneSpec{}, 1, 16, 20)[0];
  const RgbdSample f = hflip(s);
  EXPECT_EQ(histogram(f.label), histogram(s.label));
  EXPECT_FALSE(f.label == s.label);
  const RgbdSample ff = hflip(f);
  EXPECT_TRUE(same(ff.rgb, s.rgb));
  EXPECT_TRUE(same(ff.depth, s.depth));
  EXPECT_EQ(ff.label, s.label);
}

TEST(Augment, PhotometricOpsLeaveDepthAndLabels) {
  const RgbdSample s = generate_dataset(SceneSpec{}, 1, 16, 16)[0];
  AugmentOptions o;
  o.flip_p = 0.0;
  o.blur_p = 1.0;
  Rng rng(3);
  const RgbdSample a = augment(s, rng, o);
  EXPECT_TRUE(same(a.depth, s.depth));
  EXPECT_EQ(a.label, s.label);
  EXPECT_FALSE(same(a.rgb, s.rgb));
}

TEST(Augment, BlurKeepsConstantsAndJitterClamps) {
  const Tensor flat({3, 7, 7}, 0.25f);
  EXPECT_TRUE(same(gaussian_blur(flat, 2.0), flat));
  const Tensor bright = color_jitter(Tensor({3, 2, 2}, 0.9f), JitterFactors{1.2, 1.2, 1.2, 0.05});
  for (Scalar v : bright.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Netpbm, HandEncodedGraymap) {
  const std::string text = "P5\n# comment\n2 1\n65535\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  for (int b : {0x01, 0x02, 0xff, 0xfe}) bytes.push_back(static_cast<std::uint8_t>(b));
  const netpbm::Image img = netpbm::decode(bytes);
  EXPECT_EQ(img.channels, 1);
  EXPECT_EQ(img.samples, (std::vector<std::uint16_t>{0x0102, 0xfffe}));
}

TEST(Netpbm, MalformedHeaderReportsOffset) {
  const std::string text = "P6\n2 x\n255\n";
  try {
    netpbm::decode(std::vector<std::uint8_t>(text.begin(), text.end()));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 5"), std::string::npos) << e.what();
  }
  const std::string short_body = "P5\n2 2\n255\n\x01";
  EXPECT_THROW(netpbm::decode(std::vector<std::uint8_t>(short_body.begin(), short_body.end())), FormatError);
}

TEST_F(DataDir, SampleRoundTrip) {
  const RgbdSample s = generate_dataset(SceneSpec{}, 1, 24, 16)[0];
  write_sample(dir_, 12, s);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "000012_rgb.ppm"));
  const RgbdSample r = read_sample(dir_, 12);
  EXPECT_EQ(r.label, s.label);
  for (std::int64_t i = 0; i < s.depth.numel(); ++i)
    EXPECT_LE(std::abs(r.depth.data()[i] - s.depth.data()[i]), 1.0 / 65535 + 1e-7);
  for (std::int64_t i = 0; i < s.rgb.numel(); ++i)
    EXPECT_LE(std::abs(r.rgb.data()[i] - s.rgb.data()[i]), 1.0 / 255 + 1e-7);
}

TEST_F(DataDir, SizeMismatchIsDataError) {
  const auto two = generate_dataset(SceneSpec{}, 2, 16, 16);
  const auto big = generate_dataset(SceneSpec{}, 1, 16, 24);
  write_sample(dir_, 0, two[0]);
  write_sample(dir_, 1, big[0]);
  std::filesystem::copy_file(dir_ / "000001_depth.pgm", dir_ / "000000_depth.pgm",
                             std::filesystem::copy_options::overwrite_existing);
  EXPECT_THROW(read_sample(dir_, 0), DataError);
}

TEST_F(DataDir, ManifestAndSplits) {
  const SplitIndices s = split_indices(10, 0.3, 4);
  EXPECT_EQ(s.val.size(), 3u);
  std::set<int> all(s.train.begin(), s.train.end());
  for (int v : s.val) EXPECT_TRUE(all.insert(v).second);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(split_indices(10, 0.3, 4).val, s.val);

  const auto samples = generate_dataset(SceneSpec{}, 3, 16, 16);
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < 3; ++i) {
    write_sample(dir_, i, samples[i]);
    entries.push_back({i, i == 1 ? "val" : "train", 16, 16, 4});
  }
  write_manifest(dir_, entries);
  const Dataset ds = load_dataset(dir_);
  EXPECT_EQ(ds.train.size(), 2u);
  EXPECT_EQ(ds.val.size(), 1u);
  EXPECT_EQ(ds.val[0].label, samples[1].label);
}

TEST(Config, ParsesCommentsAndRejectsGarbage) {
  std::istringstream in("# header\nlr = 0.001  # inline\n\nepochs=3\n");
  const KeyValues kv = parse_key_values(in, "t.cfg");
  ASSERT_EQ(kv.size(), 2u);
  ModelConfig c;
  for (const auto& [k, v] : kv) EXPECT_TRUE(apply_model_key(c, k, v));
  EXPECT_DOUBLE_EQ(c.lr, 0.001);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_FALSE(apply_model_key(c, "depth_coupling", "1"));
  EXPECT_THROW(apply_model_key(c, "epochs", "3x"), ConfigError);
  std::istringstream bad("lr 0.1\n");
  try {
    parse_key_values(bad, "t.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t.cfg:1"), std::string::npos);
  }
}

TEST(Config, ModelKeysRoundTrip) {
  ModelConfig c = full_vitb_config();
  c.decoder_input = DecoderInput::rgb_and_depth;
  c.lr = 3e-4;
  ModelConfig back;
  for (const auto& [k, v] : model_keys(c)) ASSERT_TRUE(apply_model_key(back, k, v)) << k;
  EXPECT_EQ(model_keys(back), model_keys(c));
}

}  // namespace
}  // namespace surgdepth
