#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "holo/metrics.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace holo;

namespace {

RealImage uniform_image(int n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealImage img(n, n);
  for (auto& v : img.storage()) v = u(rng);
  return img;
}

// Scalar MS-SSIM written from the definition: direct 11x11 Gaussian window sums, contrast and
// structure kept as separate factors with C3 = C2 / 2, 2x2 mean-pool between scales.
double reference_ms_ssim(RealImage x, RealImage y, const SsimConstants& k) {
  double w[11][11], wsum = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * 1.5 * 1.5));
      wsum += w[i][j];
    }
  const double L = k.dynamic_range, C1 = (0.01 * L) * (0.01 * L), C2 = (0.03 * L) * (0.03 * L), C3 = C2 / 2;
  double result = 1.0;
  for (int s = 0; s < k.scales; ++s) {
    if (s > 0) {
      RealImage px(x.rows() / 2, x.cols() / 2), py(x.rows() / 2, x.cols() / 2);
      for (int r = 0; r < px.rows(); ++r)
        for (int c = 0; c < px.cols(); ++c) {
          px(r, c) = (x(2 * r, 2 * c) + x(2 * r + 1, 2 * c) + x(2 * r, 2 * c + 1) + x(2 * r + 1, 2 * c + 1)) / 4;
          py(r, c) = (y(2 * r, 2 * c) + y(2 * r + 1, 2 * c) + y(2 * r, 2 * c + 1) + y(2 * r + 1, 2 * c + 1)) / 4;
        }
      x = px;
      y = py;
    }
    double cs = 0.0, l = 0.0;
    int count = 0;
    for (int r = 0; r + 11 <= x.rows(); ++r)
      for (int c = 0; c + 11 <= x.cols(); ++c) {
        double mx = 0, my = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            mx += w[i][j] / wsum * x(r + i, c + j);
            my += w[i][j] / wsum * y(r + i, c + j);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double a = x(r + i, c + j) - mx, b = y(r + i, c + j) - my;
            vx += w[i][j] / wsum * a * a;
            vy += w[i][j] / wsum * b * b;
            cxy += w[i][j] / wsum * a * b;
          }
        const double sx = std::sqrt(vx), sy = std::sqrt(vy);
        const double contrast = (2 * sx * sy + C2) / (vx + vy + C2);
        const double structure = (cxy + C3) / (sx * sy + C3);
        cs += contrast * structure;
        l += (2 * mx * my + C1) / (mx * mx + my * my + C1);
        ++count;
      }
    result *= std::pow(std::max(cs / count, 0.0), k.beta[s]);
    if (s == k.scales - 1) result *= std::pow(std::max(l / count, 0.0), k.alpha);
  }
  return result;
}

}  // namespace

TEST_CASE("rmse hand cases") {
  RealImage x(2, 2, std::vector<double>{0, 0, 3, 4}), z(2, 2, 0.0), one(2, 2, 1.0);
  CHECK(rmse(x, x) == 0.0);
  CHECK(rmse(z, one) == 1.0);
  CHECK(rmse(x, z) == 2.5);
  CHECK_THROWS_AS(rmse(x, RealImage(2, 3)), InputError);
}

TEST_CASE("ecc of rotated and negated copies") {
  ComplexField x = test::random_field(16, 16, 1);
  ComplexField y = x, n = x;
  for (auto& v : y.storage()) v *= std::polar(1.0, std::numbers::pi / 3);
  for (auto& v : n.storage()) v = -v;
  CHECK(ecc(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(ecc(x, y) - 0.5) < 1e-12);
  CHECK(ecc(x, n) == doctest::Approx(-1.0).epsilon(1e-15));

  ComplexField scaled = x;
  for (auto& v : scaled.storage()) v *= 4.2;
  ComplexField other = test::random_field(16, 16, 2);
  CHECK(ecc(scaled, other) == doctest::Approx(ecc(x, other)).epsilon(1e-13));
  CHECK(std::abs(ecc(x, other)) <= 1.0);
  CHECK_THROWS_AS(ecc(x, ComplexField(16, 16, 1.12, 0.53)), NumericalError);
}

TEST_CASE("mae is the plain sum and mae_mean the per-pixel mean") {
  RealImage x(2, 2, std::vector<double>{1, 2, 3, 4}), y(2, 2, std::vector<double>{2, 1, 4, 3});
  CHECK(mae(x, x) == 0.0);
  CHECK(mae(x, y) == 4.0);
  CHECK(mae_mean(x, y) == 1.0);
  RealImage a = uniform_image(13, 5, 0, 1), b = uniform_image(13, 6, 0, 1);
  CHECK(mae(a, b) == a.size() * mae_mean(a, b));
  CHECK(mae(a, b) == mae(b, a));
  CHECK(rmse(a, b) == rmse(b, a));
  CHECK(mae(a, b) > 0.0);
}

TEST_CASE("stored MS-SSIM constants") {
  SsimConstants k = standard_ssim_constants();
  CHECK(k.scales == 5);
  CHECK(k.beta[0] == 0.0448);
  CHECK(k.beta[1] == 0.2856);
  CHECK(k.beta[2] == 0.3001);
  CHECK(k.beta[3] == 0.2363);
  CHECK(k.beta[4] == 0.1333);
  CHECK(k.alpha == 0.1333);
  CHECK(k.gamma == k.beta);
  CHECK(std::abs(k.beta_sum() - 1.0001) < 1e-7);
  CHECK(k.c1() == doctest::Approx(6.5025));
  CHECK(k.c2() == doctest::Approx(58.5225));
  CHECK(k.c2() == 2.0 * k.c3());
  CHECK(k.min_side() == 256);

  SsimConstants t = truncated_ssim_constants(3, 1.0);
  CHECK(t.beta_sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.alpha == t.beta[2]);
  CHECK(t.min_side() == 64);
}

TEST_CASE("ms_ssim of an image with itself is one") {
  RealImage x = uniform_image(256, 3, 0, 255);
  CHECK(std::abs(ms_ssim(x, x) - 1.0) < 1e-12);
  CHECK_THROWS_AS(ms_ssim(uniform_image(128, 1, 0, 255), uniform_image(128, 2, 0, 255)), InputError);
}

TEST_CASE("ms_ssim agrees with the scalar reference and drops under heavy noise") {
  const SsimConstants k = standard_ssim_constants();
  RealImage x = uniform_image(256, 4, 0, 255);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.5 * 255);
  RealImage y = x;
  for (auto& v : y.storage()) v += noise(rng);
  const double got = ms_ssim(x, y, k);
  CHECK(got < 0.5);
  CHECK(got == doctest::Approx(reference_ms_ssim(x, y, k)).epsilon(1e-10));

  // Mild noise keeps every factor positive, so the clamp plays no part.
  RealImage s = test::smooth_texture(64, 64, 6, 0.1), t = s;
  std::normal_distribution<double> mild(0.0, 0.05);
  for (auto& v : t.storage()) v += mild(rng);
  const SsimConstants k3 = truncated_ssim_constants(3, 1.0);
  CHECK(ms_ssim(s, t, k3) == doctest::Approx(reference_ms_ssim(s, t, k3)).epsilon(1e-10));
}

TEST_CASE("report on identical and phase-rotated fields") {
  ComplexField gt = test::random_field(64, 64, 7);
  MetricReport r = report(gt, gt);
  CHECK(r.rmse == 0.0);
  CHECK(r.ecc == doctest::Approx(1.0));
  CHECK(r.mae == 0.0);
  CHECK(r.ms_ssim == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.ms_ssim_scales == 3);

  ComplexField rot = gt;
  for (auto& v : rot.storage()) v *= std::polar(1.0, 0.7);
  MetricReport q = report(rot, gt);
  CHECK(q.rmse < 1e-15);
  CHECK(q.ecc == doctest::Approx(std::cos(0.7)).epsilon(1e-12));
}

TEST_CASE("report matches the standalone metrics") {
  ComplexField gt = test::random_field(64, 64, 8);
  ComplexField out = gt;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.2);
  for (auto& v : out.storage()) v += cplx(n(rng), n(rng));
  MetricReport r = report(out, gt);
  CHECK(r.rmse == rmse(out.amplitude(), gt.amplitude()));
  CHECK(r.ecc == ecc(gt, out));
  CHECK(r.mae == mae(out.amplitude(), gt.amplitude()));
  CHECK(r.mae_mean == mae_mean(out.amplitude(), gt.amplitude()));
  RealImage x = out.amplitude(), y = gt.amplitude();
  double peak = 0.0;
  for (double v : y.data()) peak = std::max(peak, v);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] *= 255.0 / peak;
    y[i] *= 255.0 / peak;
  }
  CHECK(r.ms_ssim == ms_ssim(x, y, truncated_ssim_constants(3, 255.0)));

  auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("rmse").get<double>() == r.rmse);
  CHECK(r.to_table().find("rmse") != std::string::npos);
}
