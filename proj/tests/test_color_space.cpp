#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "support.hpp"

using namespace harmonia;
using Catch::Approx;

TEST_CASE("rgb_to_hsi on reference colors") {
  auto red = rgb_to_hsi(255, 0, 0);
  CHECK(red.h == Approx(0.0).margin(1e-9));
  CHECK(red.s == Approx(1.0));
  CHECK(red.i == Approx(1.0 / 3.0));

  auto gray = rgb_to_hsi(128, 128, 128);
  CHECK(gray.h == 0.0);
  CHECK(gray.s == 0.0);
  CHECK(gray.i == Approx(128.0 / 255.0));

  auto cyan = rgb_to_hsi(0, 255, 255);
  CHECK(cyan.h == Approx(180.0));
  CHECK(cyan.s == Approx(1.0));
  CHECK(cyan.i == Approx(2.0 / 3.0));
}

TEST_CASE("rgb_to_hsi matches a hand-written arccos oracle") {
  auto oracle = [](int r8, int g8, int b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double i = (r + g + b) / 3.0;
    const double s = i == 0.0 ? 0.0 : 1.0 - std::min({r, g, b}) / i;
    const double num = 0.5 * ((r - g) + (r - b));
    const double den = std::sqrt((r - g) * (r - g) + (r - b) * (g - b));
    double h = den == 0.0 ? 0.0 : std::acos(std::clamp(num / den, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    if (b > g) h = 360.0 - h;
    return HsiPixel{h, s, i};
  };
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int n = 0; n < 500; ++n) {
    const int r = byte(rng), g = byte(rng), b = byte(rng);
    const auto got = rgb_to_hsi(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                static_cast<std::uint8_t>(b));
    const auto want = oracle(r, g, b);
    INFO(r << "," << g << "," << b);
    CHECK(got.s == Approx(want.s).margin(1e-12));
    CHECK(got.i == Approx(want.i).margin(1e-12));
    if (want.s > 1e-9) {
      CHECK(std::abs(wrap_degrees(got.h - want.h + 180.0) - 180.0) < 1e-6);
    }
  }
}

TEST_CASE("hsi round trip stays within quantization") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int n = 0; n < 300; ++n) {
    Rgb8 c{static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
           static_cast<std::uint8_t>(byte(rng))};
    const Rgb8 back = hsi_to_rgb8(rgb_to_hsi(c));
    CHECK(std::abs(int(back.r) - int(c.r)) <= 1);
    CHECK(std::abs(int(back.g) - int(c.g)) <= 1);
    CHECK(std::abs(int(back.b) - int(c.b)) <= 1);
  }
}

TEST_CASE("trapezoid membership values") {
  const auto& p = testing::partition();
  const FuzzyColor& c = p[DefaultLayout::chromatic_id(3, 1, 1)];
  const auto hu = c.hue.unwrapped();
  const double h_mid = (hu[1] + hu[2]) / 2.0;
  const double s_mid = (c.sat.b + c.sat.c) / 2.0;
  const double i_mid = (c.intensity.b + c.intensity.c) / 2.0;

  CHECK(membership(c, {h_mid, s_mid, i_mid}) == 1.0);
  CHECK(membership(c, {h_mid, c.sat.d + 0.01, i_mid}) == 0.0);
  CHECK(membership(c, {h_mid, c.sat.a - 0.01, i_mid}) == 0.0);

  const double halfway = (hu[0] + hu[1]) / 2.0;
  CHECK(membership(c, {halfway, s_mid, i_mid}) == Approx(0.5).margin(1e-12));

  // Linear interpolation along the rising edge.
  for (double t : {0.1, 0.25, 0.8}) {
    const double x = hu[0] + t * (hu[1] - hu[0]);
    CHECK(c.hue(x) == Approx(t).margin(1e-12));
  }
}

TEST_CASE("circular membership wraps across zero") {
  auto m = ChannelMembership::circular(-30.0, -10.0, 10.0, 30.0);
  CHECK(m.a == Approx(330.0));
  CHECK(m(0.0) == 1.0);
  CHECK(m(350.0) == 1.0);
  CHECK(m(340.0) == Approx(0.5));
  CHECK(m(20.0) == Approx(0.5));
  CHECK(m(180.0) == 0.0);
}

TEST_CASE("membership is within [0,1] and hue-periodic") {
  const auto& p = testing::partition();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> hue(0.0, 360.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> turns(-3, 3);
  for (int n = 0; n < 400; ++n) {
    const HsiPixel px{hue(rng), unit(rng), unit(rng)};
    const int k = turns(rng);
    for (const auto& c : p.colors()) {
      const double m = membership(c, px);
      REQUIRE(m >= 0.0);
      REQUIRE(m <= 1.0);
      if (c.hue.kind == MembershipKind::trapezoid_circular)
        REQUIRE(c.hue(px.h + 360.0 * k) == Approx(c.hue(px.h)).margin(1e-9));
    }
  }
}

TEST_CASE("default partition shape") {
  const auto p = default_partition();
  CHECK(p.size() == 92);
  CHECK(p.source() == PartitionSource::default_generated);
  for (std::size_t k = 0; k < p.size(); ++k) CHECK(p.colors()[k].id == static_cast<int>(k));
  CHECK(p[DefaultLayout::black_id].achromatic);
  CHECK(p[DefaultLayout::white_id].achromatic);
  CHECK(p[DefaultLayout::black_id].name == "black");
}

TEST_CASE("default partition covers the HSI grid") {
  const auto& p = testing::partition();
  int points = 0;
  for (int hi = 0; hi < 36; ++hi)
    for (int si = 0; si < 10; ++si)
      for (int ii = 0; ii < 10; ++ii) {
        const HsiPixel px{hi * 10.0, si / 9.0, ii / 9.0};
        double best = 0.0;
        for (const auto& c : p.colors()) best = std::max(best, membership(c, px));
        INFO("h=" << px.h << " s=" << px.s << " i=" << px.i);
        REQUIRE(best >= 0.5);
        ++points;
      }
  CHECK(points == 3600);
}

TEST_CASE("default partition is deterministic") {
  CHECK(default_partition() == default_partition());
  CHECK(to_json(default_partition()) == to_json(default_partition()));
}

TEST_CASE("reference pixels land in the expected colors") {
  const auto& p = testing::partition();
  auto best_of = [&](Rgb8 c) {
    const auto px = rgb_to_hsi(c);
    int best = -1;
    double m = -1.0;
    for (const auto& col : p.colors())
      if (membership(col, px) > m) m = membership(col, px), best = col.id;
    return best;
  };
  CHECK(best_of({0, 0, 0}) == DefaultLayout::black_id);
  CHECK(best_of({255, 255, 255}) == DefaultLayout::white_id);
  CHECK(best_of({255, 0, 0}) == DefaultLayout::chromatic_id(0, 2, 0));
  CHECK(best_of({0, 0, 255}) == DefaultLayout::chromatic_id(7, 2, 0));
}

TEST_CASE("partition save and load round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "harmonia_partition_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "partition.json";
  save_partition(testing::partition(), file);
  const auto loaded = load_partition(file);
  CHECK(loaded == testing::partition());
  CHECK(loaded.source() == PartitionSource::file);
  std::filesystem::remove_all(dir);
}

TEST_CASE("partition validation errors") {
  auto doc = to_json(testing::partition());

  SECTION("duplicate ids") {
    doc["colors"][1]["id"] = 0;
    CHECK_THROWS_AS(partition_from_json(doc), ValidationError);
    CHECK_THROWS_WITH(partition_from_json(doc), Catch::Matchers::ContainsSubstring("duplicate color id 0"));
  }
  SECTION("unordered breakpoints name the color") {
    auto& sat = doc["colors"][5]["sat"];
    const double a = sat["a"].get<double>(), b = sat["b"].get<double>();
    sat["a"] = b + 0.1;
    sat["b"] = a;
    const std::string name = doc["colors"][5]["name"].get<std::string>();
    CHECK_THROWS_AS(partition_from_json(doc), ValidationError);
    CHECK_THROWS_WITH(partition_from_json(doc), Catch::Matchers::ContainsSubstring(name));
  }
  SECTION("coverage hole") {
    doc["colors"].erase(doc["colors"].size() - 1);  // drop white
    CHECK_THROWS_AS(partition_from_json(doc), ValidationError);
  }
  SECTION("malformed document") {
    CHECK_THROWS_AS(partition_from_json(nlohmann::json{{"version", "x"}}), ParseError);
  }
}
