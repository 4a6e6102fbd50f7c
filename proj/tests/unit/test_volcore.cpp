// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "../support/oracles.hpp"
#include "../support/test_util.hpp"
#include "baggagedet/core/rng.hpp"
#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/bvox.hpp"
#include "baggagedet/volcore/manifest.hpp"
#include "baggagedet/volcore/resample.hpp"
#include "baggagedet/volcore/volume.hpp"

using namespace baggagedet;

namespace {

Volume random_volume(Rng& rng, Dims3 d, int channels) {
  Volume v(d, channels);
  for (auto& x : v.voxels()) x = static_cast<float>(uniform01(rng));
  return v;
}

}  // namespace

TEST_CASE("volume enforces its shape invariants") {
  CHECK_THROWS_AS(Volume(Dims3{0, 2, 2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Volume(Dims3{2, 2, 2}, 1, std::vector<float>(7)), std::invalid_argument);
  std::vector<float> bad(8, 0.f);
  bad[3] = std::nanf("");
  CHECK_THROWS_AS(Volume(Dims3{2, 2, 2}, 1, bad), std::invalid_argument);
  Volume v(Dims3{2, 3, 4}, 2);
  CHECK(v.voxels().size() == 48);
}

TEST_CASE("zero volume survives save and load") {
  testutil::TempDir tmp("volcore");
  Volume v(Dims3{2, 3, 4}, 1);
  save_volume(v, tmp / "z.bvox");
  const auto [back, anns] = load_volume(tmp / "z.bvox");
  CHECK(back == v);
  CHECK(anns.empty());
}

TEST_CASE("payload length for an 8^3 two-channel f32 volume is 4096 bytes") {
  Volume v(Dims3{8, 8, 8}, 2);
  const auto bytes = encode_bvox(v);
  CHECK(bytes.size() - kBvoxHeaderSize == 2u * 8 * 8 * 8 * 4);
  CHECK(std::memcmp(bytes.data(), "BVOX", 4) == 0);
  CHECK(static_cast<int>(bytes[4]) == 1);
  CHECK(static_cast<int>(bytes[6]) == 2);
}

TEST_CASE("decoder reports each malformed input with a distinct error") {
  Volume v(Dims3{2, 2, 2}, 1);
  auto bytes = encode_bvox(v);
  auto expect = [](std::vector<std::byte> b, BvoxErrc code) {
    try {
      decode_bvox(b);
      FAIL("expected an error");
    } catch (const BvoxError& e) {
      CHECK(e.code() == code);
    }
  };
  auto magic = bytes;
  magic[0] = std::byte{'X'};
  expect(magic, BvoxErrc::BadMagic);
  auto version = bytes;
  version[4] = std::byte{2};
  expect(version, BvoxErrc::VersionMismatch);
  auto dtype = bytes;
  dtype[5] = std::byte{9};
  expect(dtype, BvoxErrc::UnsupportedDtype);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 1);
  expect(truncated, BvoxErrc::TruncatedPayload);
  auto longer = bytes;
  longer.push_back(std::byte{0});
  longer.push_back(std::byte{0});
  longer.push_back(std::byte{0});
  longer.push_back(std::byte{0});
  expect(longer, BvoxErrc::DimsMismatch);
}

TEST_CASE("random volumes round-trip bit-exactly across dtypes and channel counts") {
  testutil::TempDir tmp("volcore_rt");
  Rng rng = make_rng(11);
  for (int i = 0; i < 40; ++i) {
    const Dims3 d{uniform_int(rng, 1, 9), uniform_int(rng, 1, 9), uniform_int(rng, 1, 9)};
    const int ch = uniform_int(rng, 1, 3);
    Volume v = random_volume(rng, d, ch);
    v.meta.source_id = "vol" + std::to_string(i);
    v.meta.provenance = i % 2 ? Provenance::TipComposited : Provenance::RealSynthetic;
    v.meta.energy = static_cast<EnergyTag>(i % 3);
    const BvoxDtype dtype = i % 2 ? BvoxDtype::F64 : BvoxDtype::F32;
    std::vector<Annotation> anns{{Box3D(0.5, 1, 2, 3, 4.25, 5), 3, 7}};
    save_volume(v, tmp / "r.bvox", anns, dtype);
    const auto [back, back_anns] = load_volume(tmp / "r.bvox");
    CHECK(back == v);
    CHECK(std::memcmp(back.voxels().data(), v.voxels().data(), v.voxels().size() * sizeof(float)) == 0);
    CHECK(back_anns == anns);
    CHECK(back.meta.source_id == v.meta.source_id);
    CHECK(back.meta.provenance == v.meta.provenance);
    CHECK(back.meta.energy == v.meta.energy);
  }
}

TEST_CASE("iou3d examples") {
  CHECK(iou3d(Box3D(0, 0, 0, 4, 4, 4), Box3D(0, 0, 0, 4, 4, 4)) == 1.0);
  CHECK(iou3d(Box3D(0, 0, 0, 2, 2, 2), Box3D(5, 5, 5, 7, 7, 7)) == 0.0);
  CHECK(iou3d(Box3D(0, 0, 0, 4, 4, 4), Box3D(2, 2, 2, 6, 6, 6)) == doctest::Approx(8.0 / 120.0).epsilon(1e-15));
}

TEST_CASE("iou3d equals the rasterized oracle on integer boxes in a 10^3 grid") {
  // exhaustive over all boxes would be (C(11,2))^3 ~ 166k per side; sample pairs densely instead
  Rng rng = make_rng(5);
  auto rand_box = [&] {
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = uniform_int(rng, 0, 9);
      hi[a] = uniform_int(rng, lo[a] + 1, 10);
    }
    return Box3D(lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]);
  };
  for (int i = 0; i < 3000; ++i) {
    const Box3D a = rand_box(), b = rand_box();
    const double o = oracle::raster_iou(a, b, 10);
    CHECK(iou3d(a, b) == doctest::Approx(o).epsilon(1e-12));
    CHECK(iou3d(a, b) == iou3d(b, a));
  }
}

TEST_CASE("iou3d is monotone non-increasing as boxes translate apart") {
  const Box3D a(0, 0, 0, 5, 5, 5);
  double prev = 1.0;
  for (int t = 0; t <= 8; ++t) {
    const double v = iou3d(a, Box3D(0, 0, t, 5, 5, 5 + t));
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(prev == 0.0);
}

TEST_CASE("box validation") {
  CHECK_THROWS_AS(checked_box(0, 0, 0, 0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(checked_box(0, 0, 0, 1, 1, INFINITY), std::invalid_argument);
  CHECK(is_valid(checked_box(0, 0, 0, 1, 1, 1)));
}

TEST_CASE("resample examples") {
  Rng rng = make_rng(3);
  Volume v = random_volume(rng, Dims3{7, 5, 6}, 2);
  CHECK(resample(v, {1}) == v);

  Volume c(Dims3{7, 8, 5}, 1);
  for (auto& x : c.voxels()) x = 0.375f;
  for (int s = 1; s <= 4; ++s) {
    const Volume r = resample(c, {s});
    CHECK(r.dims() == Dims3{(7 + s - 1) / s, (8 + s - 1) / s, (5 + s - 1) / s});
    for (float x : r.voxels()) CHECK(x == doctest::Approx(0.375f));
  }

  Volume one(Dims3{6, 6, 6}, 1);
  one.at(0, 0, 0, 0) = 1.0f;
  const Volume r = resample(one, {3});
  CHECK(r.dims() == Dims3{2, 2, 2});
  CHECK(r.at(0, 0, 0, 0) == doctest::Approx(1.0 / 27.0));
  for (std::size_t i = 1; i < r.voxels().size(); ++i) CHECK(r.voxels()[i] == 0.0f);
}

TEST_CASE("resample averages edge blocks over the voxels they contain") {
  Volume v(Dims3{4, 1, 1}, 1, std::vector<float>{0.1f, 0.2f, 0.3f, 0.8f});
  const Volume r = resample(v, {3});
  REQUIRE(r.dims() == Dims3{2, 1, 1});
  CHECK(r.at(0, 0, 0, 0) == doctest::Approx(0.2));
  CHECK(r.at(0, 1, 0, 0) == doctest::Approx(0.8));
  CHECK_THROWS_AS(resample(v, {0}), std::invalid_argument);
  CHECK_THROWS_AS(resample(v, {5}), std::invalid_argument);
}

TEST_CASE("rescale_boxes divides, clamps, and keeps one voxel") {
  const auto out = rescale_boxes({Box3D(3, 6, 9, 12, 15, 18), Box3D(0, 0, 0, 1, 1, 1), Box3D(40, 40, 40, 48, 48, 48)},
                                 {3}, Dims3{16, 16, 16});
  CHECK(out[0] == Box3D(1, 2, 3, 4, 5, 6));
  for (const auto& b : out) {
    CHECK(is_valid(b));
    for (int a = 0; a < 3; ++a) {
      CHECK(b.extent(a) >= 1.0);
      CHECK(b.lo[a] >= 0.0);
      CHECK(b.hi[a] <= 16.0);
    }
  }
}

TEST_CASE("rescale_boxes preserves center ordering along each axis") {
  Rng rng = make_rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Box3D> boxes;
    for (int i = 0; i < 4; ++i) {
      double lo[3], hi[3];
      for (int a = 0; a < 3; ++a) {
        lo[a] = uniform(rng, 0, 40);
        hi[a] = lo[a] + uniform(rng, 3, 8);
      }
      boxes.emplace_back(lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]);
    }
    for (int s = 1; s <= 4; ++s) {
      const Dims3 od = scaled_dims(Dims3{48, 48, 48}, s);
      const auto out = rescale_boxes(boxes, {s}, od);
      for (int a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < boxes.size(); ++i)
          for (std::size_t j = 0; j < boxes.size(); ++j)
            if (boxes[i].center(a) < boxes[j].center(a)) CHECK(out[i].center(a) <= out[j].center(a));
    }
  }
}

TEST_CASE("pad_to_multiple examples") {
  Volume v(Dims3{32, 32, 32}, 1);
  const auto same = pad_to_multiple(v, 32);
  CHECK(same.volume.dims() == Dims3{32, 32, 32});
  CHECK(same.offset == std::array<int, 3>{0, 0, 0});

  Rng rng = make_rng(2);
  Volume w = random_volume(rng, Dims3{33, 40, 5}, 2);
  const auto p = pad_to_multiple(w, 32);
  CHECK(p.volume.dims() == Dims3{64, 64, 32});
  CHECK(p.offset == std::array<int, 3>{0, 0, 0});
  for (int c = 0; c < 2; ++c)
    for (int z = 0; z < 64; ++z)
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 32; ++x) {
          const bool inside = z < 33 && y < 40 && x < 5;
          const float expect = inside ? w.at(c, z, y, x) : 0.0f;
          if (p.volume.at(c, z, y, x) != expect) {
            FAIL("padding mismatch");
          }
        }
}

TEST_CASE("channel selection") {
  Volume v(Dims3{2, 2, 2}, 2);
  v.at(0, 0, 0, 0) = 0.25f;
  v.at(1, 0, 0, 0) = 0.75f;
  CHECK(select_channels(v, ChannelMode::Low).at(0, 0, 0, 0) == 0.25f);
  CHECK(select_channels(v, ChannelMode::High).at(0, 0, 0, 0) == 0.75f);
  CHECK(select_channels(v, ChannelMode::Dual) == v);
  Volume single(Dims3{2, 2, 2}, 1);
  CHECK(select_channels(single, ChannelMode::Low) == single);
  CHECK_THROWS_AS(select_channels(single, ChannelMode::High), std::invalid_argument);
  CHECK(parse_channel_mode("dual") == ChannelMode::Dual);
  CHECK_THROWS(parse_channel_mode("medium"));
}

TEST_CASE("manifest formatting round-trips and splits are 70/30") {
  std::vector<std::string> vols;
  for (int i = 0; i < 100; ++i) vols.push_back("vol_" + std::to_string(i) + ".bvox");
  const Manifest m = make_splits(vols, 0.7, 3, 42, "/data");
  for (int s = 1; s <= 3; ++s) {
    CHECK(m.select(SplitRole::Train, s).size() == 70);
    CHECK(m.select(SplitRole::Test, s).size() == 30);
  }
  CHECK(m.select(SplitRole::Train, 1) != m.select(SplitRole::Train, 2));
  const Manifest back = parse_manifest(format_manifest(m), "/data");
  CHECK(back.entries == m.entries);
  CHECK(make_splits(vols, 0.7, 3, 42, "/data").entries == m.entries);
}
