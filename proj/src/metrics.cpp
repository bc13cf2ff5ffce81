#include "holo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace holo {

namespace {

void require_same(const auto& x, const auto& y) {
  require(x.same_shape(y), "image dimensions differ: " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                               " vs " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
}

// Valid-mode separable Gaussian filter.
RealImage gaussian_valid(const RealImage& img, const std::array<double, kSsimWindow>& taps) {
  const int orows = img.rows() - kSsimWindow + 1;
  const int ocols = img.cols() - kSsimWindow + 1;
  RealImage tmp(img.rows(), ocols);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < ocols; ++c) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * img(r, c + k);
      tmp(r, c) = s;
    }
  RealImage out(orows, ocols);
  for (int r = 0; r < orows; ++r)
    for (int c = 0; c < ocols; ++c) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * tmp(r + k, c);
      out(r, c) = s;
    }
  return out;
}

RealImage product(const RealImage& a, const RealImage& b) {
  RealImage out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

double SsimConstants::beta_sum() const {
  double s = 0.0;
  for (int i = 0; i < scales; ++i) s += beta[i];
  return s;
}

SsimConstants standard_ssim_constants() { return SsimConstants{}; }

SsimConstants truncated_ssim_constants(int scales, double dynamic_range) {
  require(scales >= 1 && scales <= 5, "MS-SSIM scale count must be in [1, 5]");
  const SsimConstants base;
  SsimConstants k;
  k.scales = scales;
  k.dynamic_range = dynamic_range;
  double total = 0.0;
  for (int i = 0; i < scales; ++i) total += base.beta[i];
  k.beta.fill(0.0);
  k.gamma.fill(0.0);
  for (int i = 0; i < scales; ++i) k.beta[i] = k.gamma[i] = base.beta[i] / total;
  k.alpha = k.beta[scales - 1];
  return k;
}

std::array<double, kSsimWindow> ssim_gaussian_taps() {
  std::array<double, kSsimWindow> t{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    t[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += t[i];
  }
  for (double& v : t) v /= sum;
  return t;
}

double rmse(const RealImage& x, const RealImage& y) {
  require_same(x, y);
  require(x.size() > 0, "empty image");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s / static_cast<double>(x.size()));
}

double ecc(const Grid<cplx>& x, const Grid<cplx>& y) {
  require_same(x, y);
  double ex = 0.0, ey = 0.0;
  cplx inner = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    inner += std::conj(x[i]) * y[i];
    ex += std::norm(x[i]);
    ey += std::norm(y[i]);
  }
  if (ex <= 0.0 || ey <= 0.0) throw NumericalError("ECC undefined for a zero-energy image");
  return std::clamp(inner.real() / std::sqrt(ex * ey), -1.0, 1.0);
}

double mae(const RealImage& x, const RealImage& y) {
  require_same(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s;
}

double mae_mean(const RealImage& x, const RealImage& y) {
  require(x.size() > 0, "empty image");
  return mae(x, y) / static_cast<double>(x.size());
}

RealImage mean_pool2(const RealImage& img) {
  RealImage out(img.rows() / 2, img.cols() / 2);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c)
      out(r, c) = 0.25 * (img(2 * r, 2 * c) + img(2 * r, 2 * c + 1) + img(2 * r + 1, 2 * c) + img(2 * r + 1, 2 * c + 1));
  return out;
}

double ms_ssim(const RealImage& x, const RealImage& y, const SsimConstants& k) {
  require_same(x, y);
  require(k.scales >= 1 && k.scales <= 5, "MS-SSIM scale count must be in [1, 5]");
  require(x.rows() >= k.min_side() && x.cols() >= k.min_side(),
          "image too small for " + std::to_string(k.scales) + "-scale MS-SSIM (need " +
              std::to_string(k.min_side()) + " px per side)");
  for (int s = 0; s < k.scales; ++s)
    require(k.beta[s] == k.gamma[s], "MS-SSIM needs equal contrast and structure exponents");

  const auto taps = ssim_gaussian_taps();
  const double c1 = k.c1(), c2 = k.c2();
  RealImage xs = x, ys = y;
  double result = 1.0;
  for (int s = 0; s < k.scales; ++s) {
    if (s > 0) {
      xs = mean_pool2(xs);
      ys = mean_pool2(ys);
    }
    const RealImage mx = gaussian_valid(xs, taps);
    const RealImage my = gaussian_valid(ys, taps);
    const RealImage mxx = gaussian_valid(product(xs, xs), taps);
    const RealImage myy = gaussian_valid(product(ys, ys), taps);
    const RealImage mxy = gaussian_valid(product(xs, ys), taps);
    double cs_sum = 0.0, l_sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = mxx[i] - mx[i] * mx[i];
      const double vy = myy[i] - my[i] * my[i];
      const double cxy = mxy[i] - mx[i] * my[i];
      cs_sum += (2.0 * cxy + c2) / (vx + vy + c2);
      l_sum += (2.0 * mx[i] * my[i] + c1) / (mx[i] * mx[i] + my[i] * my[i] + c1);
    }
    const double n = static_cast<double>(mx.size());
    result *= std::pow(std::max(cs_sum / n, 0.0), k.beta[s]);
    if (s == k.scales - 1) result *= std::pow(std::max(l_sum / n, 0.0), k.alpha);
  }
  return result;
}

std::string MetricReport::to_json() const {
  nlohmann::json j = {{"rmse", rmse},         {"ecc", ecc},         {"mae", mae},
                      {"mae_mean", mae_mean}, {"ms_ssim", ms_ssim}, {"ms_ssim_scales", ms_ssim_scales}};
  return j.dump(2) + "\n";
}

std::string MetricReport::to_table() const {
  std::string t;
  t += "metric          value\n";
  t += "rmse            " + fmt6(rmse) + "\n";
  t += "ecc             " + fmt6(ecc) + "\n";
  t += "mae (sum)       " + fmt6(mae) + "\n";
  t += "mae (mean)      " + fmt6(mae_mean) + "\n";
  t += "ms_ssim (" + std::to_string(ms_ssim_scales) + "sc)    " + fmt6(ms_ssim) + "\n";
  return t;
}

MetricReport report(const ComplexField& out, const ComplexField& gt) {
  require_same(out, gt);
  const RealImage a_out = out.amplitude();
  const RealImage a_gt = gt.amplitude();
  MetricReport r;
  r.rmse = rmse(a_out, a_gt);
  r.ecc = ecc(gt, out);
  r.mae = mae(a_out, a_gt);
  r.mae_mean = mae_mean(a_out, a_gt);

  const int side = std::min(out.rows(), out.cols());
  SsimConstants k = standard_ssim_constants();
  if (side < k.min_side()) {
    int scales = 4;
    while (scales > 1 && side < truncated_ssim_constants(scales, 255.0).min_side()) --scales;
    k = truncated_ssim_constants(scales, 255.0);
  }
  if (side >= k.min_side()) {
    const double peak = *std::max_element(a_gt.data().begin(), a_gt.data().end());
    const double scale = peak > 0.0 ? 255.0 / peak : 1.0;
    RealImage x = a_out, y = a_gt;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] *= scale;
      y[i] *= scale;
    }
    r.ms_ssim = ms_ssim(x, y, k);
    r.ms_ssim_scales = k.scales;
  }
  return r;
}

}  // namespace holo
