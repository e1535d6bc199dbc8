#include <gtest/gtest.h>

#include "support.hpp"

using namespace zivos;
using zivos::testing::Gen;
using zivos::testing::TempDir;

namespace {

ProbabilityMap map_of(int h, int w, int c, std::vector<float> v) { return {h, w, c, std::move(v)}; }

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::invalid_argument;
}

}  // namespace

TEST(Argmax, StrictMaximum) {
  EXPECT_EQ(argmax_labels(map_of(1, 1, 2, {0.3f, 0.7f}))(0, 0), 1);
}

TEST(Argmax, TieGoesToLowestId) {
  EXPECT_EQ(argmax_labels(map_of(1, 1, 3, {0.4f, 0.4f, 0.2f}))(0, 0), 0);
}

TEST(Argmax, OneHot) {
  const auto l = argmax_labels(map_of(2, 1, 2, {1.f, 0.f, 0.f, 1.f}));
  EXPECT_EQ(l(0, 0), 0);
  EXPECT_EQ(l(1, 0), 1);
}

TEST(Argmax, RaisingTheWinnerNeverChangesTheLabel) {
  Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = g.integer(2, 6);
    auto p = g.simplex(c);
    const auto before = argmax_labels(map_of(1, 1, c, p))(0, 0);
    // Move mass from the other classes onto the winner.
    const float eps = static_cast<float>(g.real(0.0, 1.0));
    float moved = 0.0f;
    for (int k = 0; k < c; ++k) {
      if (k == before) continue;
      const float take = p[static_cast<std::size_t>(k)] * eps;
      p[static_cast<std::size_t>(k)] -= take;
      moved += take;
    }
    p[before] += moved;
    EXPECT_EQ(argmax_labels(map_of(1, 1, c, p))(0, 0), before);
  }
}

TEST(ExtractObject, Examples) {
  LabelMask a(1, 3, std::vector<std::uint8_t>{0, 2, 2});
  const auto m = extract_object_mask(a, 2);
  EXPECT_EQ(std::vector<std::uint8_t>(m.values().begin(), m.values().end()), (std::vector<std::uint8_t>{0, 1, 1}));
  LabelMask b(1, 2, std::vector<std::uint8_t>{0, 0});
  EXPECT_TRUE(empty(extract_object_mask(b, 1)));
  LabelMask c(1, 2, std::vector<std::uint8_t>{1, 2});
  const auto mc = extract_object_mask(c, 1);
  EXPECT_EQ(mc(0, 0), 1);
  EXPECT_EQ(mc(0, 1), 0);
  EXPECT_THROW(extract_object_mask(c, 0), Error);
}

TEST(ExtractObject, DistinctIdsAreDisjoint) {
  Gen g(5);
  const auto labels = argmax_labels(g.probability(12, 9, 5));
  for (int a = 1; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      const auto ma = extract_object_mask(labels, a);
      const auto mb = extract_object_mask(labels, b);
      for (std::size_t i = 0; i < ma.size(); ++i) EXPECT_FALSE(ma.values()[i] && mb.values()[i]);
    }
  }
}

TEST(ProbabilityMapValidation, RejectsBadInputs) {
  EXPECT_EQ(kind_of([] { map_of(1, 1, 2, {0.6f, 0.6f}); }), ErrorKind::invalid_probability);
  EXPECT_EQ(kind_of([] { map_of(1, 1, 2, {-0.1f, 1.1f}); }), ErrorKind::invalid_probability);
  EXPECT_EQ(kind_of([] { map_of(1, 2, 2, {0.5f, 0.5f}); }), ErrorKind::shape_mismatch);
  EXPECT_EQ(kind_of([] { map_of(1, 1, 0, {}); }), ErrorKind::invalid_argument);
  EXPECT_NO_THROW(map_of(1, 1, 2, {0.50004f, 0.5f}));
}

TEST(Zivp, RoundTripIsBitExact) {
  Gen g(3);
  const auto m = g.probability(2, 2, 3);
  TempDir dir("zivp");
  save_probability_map(m, dir.path() / "a.zivp");
  const auto back = load_probability_map(dir.path() / "a.zivp");
  ASSERT_EQ(back.height(), 2);
  ASSERT_EQ(back.width(), 2);
  ASSERT_EQ(back.classes(), 3);
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(m.values()[i]), std::bit_cast<std::uint32_t>(back.values()[i]));
  }
}

TEST(Zivp, HeaderLayoutIsLittleEndian) {
  const std::vector<float> v{1.0f};
  const auto bytes = encode_zivp(1, 1, 1, v);
  ASSERT_EQ(bytes.size(), 24u);
  EXPECT_EQ(bytes.substr(0, 4), "ZIVP");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 0);
  // 1.0f = 0x3F800000, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[23]), 0x3F);
}

TEST(Zivp, DistinctLoadErrors) {
  const std::vector<float> v{0.25f, 0.75f};
  const auto good = encode_zivp(1, 1, 2, v);
  auto bad_magic = good;
  bad_magic.replace(0, 4, "XXXX");
  EXPECT_EQ(kind_of([&] { decode_probability_map(bad_magic); }), ErrorKind::bad_magic);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(kind_of([&] { decode_probability_map(bad_version); }), ErrorKind::version_mismatch);
  EXPECT_EQ(kind_of([&] { decode_probability_map(good.substr(0, good.size() - 1)); }), ErrorKind::truncated);
  EXPECT_EQ(kind_of([&] { decode_probability_map(good.substr(0, 10)); }), ErrorKind::truncated);
  EXPECT_EQ(kind_of([&] { decode_probability_map(good + "abcd"); }), ErrorKind::trailing_data);
  const std::vector<float> off{0.25f, 0.25f};
  EXPECT_EQ(kind_of([&] { decode_probability_map(encode_zivp(1, 1, 2, off)); }), ErrorKind::invalid_probability);
}

TEST(Pgm, RoundTripIncludingValue255) {
  LabelMask m(3, 3, std::vector<std::uint8_t>{0, 1, 2, 3, 4, 5, 6, 7, 255});
  TempDir dir("pgm");
  save_mask_pgm(m, dir.path() / "m.pgm");
  EXPECT_EQ(load_mask_pgm(dir.path() / "m.pgm"), m);
}

TEST(Pgm, ReadsHeaderComments) {
  std::string bytes = "P5\n# made by hand\n2 1\n255\n";
  bytes.push_back(static_cast<char>(7));
  bytes.push_back(static_cast<char>(9));
  const auto m = decode_mask_pgm(bytes);
  EXPECT_EQ(m.width(), 2);
  EXPECT_EQ(m(0, 1), 9);
}

TEST(Pgm, RejectsOtherVariantsAndSizes) {
  EXPECT_EQ(kind_of([] { decode_mask_pgm("P2\n1 1\n255\n0\n"); }), ErrorKind::format);
  EXPECT_EQ(kind_of([] { decode_mask_pgm(std::string("P5\n1 1\n15\n") + '\0'); }), ErrorKind::format);
  EXPECT_EQ(kind_of([] { decode_mask_pgm("P5\n2 2\n255\nab"); }), ErrorKind::truncated);
  EXPECT_EQ(kind_of([] { decode_mask_pgm("P5\n1 1\n255\nab"); }), ErrorKind::trailing_data);
}

TEST(Manifest, RoundTripAndValidation) {
  TempDir dir("manifest");
  SequenceManifest m;
  m.name = "seq";
  m.fps = 24.0;
  m.objects = {1, 3};
  m.frames = {{"p0.zivp", "g0.pgm", std::nullopt}, {"p1.zivp", "g1.pgm", fs::path("i1.pgm")}};
  save_manifest(m, dir.path() / "manifest.json");
  const auto back = load_manifest(dir.path() / "manifest.json");
  EXPECT_EQ(back.name, "seq");
  EXPECT_EQ(*back.fps, 24.0);
  EXPECT_EQ(back.objects, (std::vector<ObjectId>{1, 3}));
  ASSERT_EQ(back.frames.size(), 2u);
  EXPECT_EQ(back.resolve(back.frames[1].prob), dir.path() / "p1.zivp");
  EXPECT_FALSE(back.frames[0].image.has_value());
  EXPECT_EQ(*back.frames[1].image, fs::path("i1.pgm"));

  const auto base = nlohmann::json::parse(R"({"name":"x","objects":[1],"frames":[{"prob":"a","gt":"b"}]})");
  EXPECT_NO_THROW(parse_manifest(base, dir.path()));
  EXPECT_FALSE(parse_manifest(base, dir.path()).fps.has_value());
  auto dup = base;
  dup["objects"] = {2, 2};
  EXPECT_THROW(parse_manifest(dup, dir.path()), Error);
  auto none = base;
  none["frames"] = nlohmann::json::array();
  EXPECT_THROW(parse_manifest(none, dir.path()), Error);
  auto missing = base;
  missing.erase("objects");
  EXPECT_EQ(kind_of([&] { parse_manifest(missing, dir.path()); }), ErrorKind::format);
}
