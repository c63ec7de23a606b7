#include <random>
#include <set>

#include "doctest.h"
#include "sphin/voronoi.hpp"

using namespace sphin;

namespace {

// Reference labeling: ascending seed scan with strict improvement, so the
// lowest index wins ties. Intentionally independent of the transform code.
void brute_force(const InpaintingMask& mask, Eigen::ArrayXXi& label,
                 Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& d2) {
  const int w = mask.width();
  const int h = mask.height();
  label.resize(h, w);
  d2.resize(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      int who = -1;
      for (std::size_t j = 0; j < mask.size(); ++j) {
        const auto& p = mask.points()[j].pos;
        const std::int64_t d =
            std::int64_t(x - p.x) * (x - p.x) + std::int64_t(y - p.y) * (y - p.y);
        if (d < best) {
          best = d;
          who = static_cast<int>(j);
        }
      }
      label(y, x) = who;
      d2(y, x) = best;
    }
}

InpaintingMask random_mask(int w, int h, int n, std::mt19937_64& rng) {
  InpaintingMask m(w, h);
  while (static_cast<int>(m.size()) < n) {
    const int x = static_cast<int>(rng() % w);
    const int y = static_cast<int>(rng() % h);
    if (!m.occupied(x, y)) m.add({{x, y}, 0.0});
  }
  return m;
}

}  // namespace

TEST_CASE("single seed closed form") {
  InpaintingMask m(4, 4);
  m.add({{0, 0}, 1.0});
  const auto vd = distance_transform(m);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      CHECK(vd.dist2(y, x) == double(x * x + y * y));
      CHECK(vd.label(y, x) == 0);
    }
  CHECK(vd.area[0] == 16);
}

TEST_CASE("two seeds on a line split cleanly") {
  InpaintingMask m(4, 1);
  m.add({{0, 0}, 0.0});
  m.add({{3, 0}, 0.0});
  const auto vd = distance_transform(m);
  CHECK(vd.label(0, 0) == 0);
  CHECK(vd.label(0, 1) == 0);
  CHECK(vd.label(0, 2) == 1);
  CHECK(vd.label(0, 3) == 1);
  CHECK(vd.dist2(0, 0) == 0.0);
  CHECK(vd.dist2(0, 1) == 1.0);
  CHECK(vd.dist2(0, 2) == 1.0);
  CHECK(vd.dist2(0, 3) == 0.0);
}

TEST_CASE("equidistant pixels go to the lowest seed index") {
  InpaintingMask m(5, 1);
  m.add({{4, 0}, 0.0});  // index 0, to the right
  m.add({{0, 0}, 0.0});  // index 1, to the left
  const auto vd = distance_transform(m);
  // pixel 2 is equidistant; seed 0 sits at x=4
  CHECK(vd.label(0, 2) == 0);
}

TEST_CASE("random instances match brute force exactly") {
  std::mt19937_64 rng(123);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng() % 40);
    const auto m = random_mask(32, 32, n, rng);
    const auto vd = distance_transform(m);

    Eigen::ArrayXXi ref_label;
    Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> ref_d2;
    brute_force(m, ref_label, ref_d2);

    std::vector<std::int64_t> ref_area(m.size(), 0);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        REQUIRE(vd.dist2(y, x) == double(ref_d2(y, x)));
        REQUIRE(vd.label(y, x) == ref_label(y, x));
        ++ref_area[static_cast<std::size_t>(ref_label(y, x))];
      }
    for (std::size_t j = 0; j < m.size(); ++j) CHECK(vd.area[j] == ref_area[j]);
  }
}

TEST_CASE("diagram invariants") {
  std::mt19937_64 rng(99);
  const auto m = random_mask(20, 17, 12, rng);
  const auto vd = distance_transform(m);

  // seeds label themselves, areas >= 1 and sum to the pixel count
  for (std::size_t j = 0; j < m.size(); ++j) {
    const auto& p = m.points()[j].pos;
    CHECK(vd.label(p.y, p.x) == static_cast<int>(j));
    CHECK(vd.area[j] >= 1);
  }
  std::int64_t total = 0;
  for (auto a : vd.area) total += a;
  CHECK(total == 20 * 17);

  // label consistency and integer-valued dist2
  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 20; ++x) {
      const auto& p = m.points()[static_cast<std::size_t>(vd.label(y, x))].pos;
      CHECK(vd.dist2(y, x) == double((x - p.x) * (x - p.x) + (y - p.y) * (y - p.y)));
      CHECK(vd.dist2(y, x) == std::floor(vd.dist2(y, x)));
    }
}

TEST_CASE("empty mask is rejected") {
  InpaintingMask m(4, 4);
  CHECK_THROWS_AS(distance_transform(m), std::invalid_argument);
}

TEST_CASE("cell errors") {
  InpaintingMask m(3, 3);
  m.add({{1, 1}, 0.0});
  const auto vd = distance_transform(m);

  ImageD f = ImageD::Constant(3, 3, 10.0);
  ImageD u = ImageD::Constant(3, 3, 8.0);
  const auto e = cell_errors(vd, f, u);
  REQUIRE(e.size() == 1);
  CHECK(e[0] == doctest::Approx(36.0));  // 9 pixels * 2^2

  const auto zero = cell_errors(vd, f, f);
  CHECK(zero[0] == 0.0);
}

TEST_CASE("cell errors match direct summation") {
  std::mt19937_64 rng(5);
  const auto m = random_mask(16, 16, 5, rng);
  const auto vd = distance_transform(m);
  ImageD f(16, 16), u(16, 16);
  for (int i = 0; i < f.size(); ++i) {
    f.data()[i] = double(rng() % 256);
    u.data()[i] = double(rng() % 256);
  }
  const auto e = cell_errors(vd, f, u);
  std::vector<double> ref(m.size(), 0.0);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      ref[static_cast<std::size_t>(vd.label(y, x))] +=
          (f(y, x) - u(y, x)) * (f(y, x) - u(y, x));
  for (std::size_t j = 0; j < m.size(); ++j) CHECK(e[j] == doctest::Approx(ref[j]));
}
