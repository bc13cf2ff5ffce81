#include "holo/phase_retrieval.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "holo/propagation.hpp"

namespace holo {

namespace {

std::vector<double> measured_amplitude(const IntensityImage& img) {
  std::vector<double> a(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) a[i] = std::sqrt(img[i]);
  return a;
}

}  // namespace

MhprResult mhpr(const HologramStack& stack, const MhprConfig& cfg) {
  validate(stack);
  require(cfg.iterations >= 0, "iteration count must be non-negative");
  require(cfg.amplitude_weight >= 0.0 && cfg.amplitude_weight <= 1.0, "amplitude weight must be in [0, 1]");
  const std::size_t m = stack.size();
  if (m >= 2) {
    bool diverse = false;
    for (const Hologram& h : stack.holograms) diverse |= h.z2_um != stack.holograms.front().z2_um;
    require(diverse, "all holograms share one z2; multi-height retrieval needs distinct heights");
  }

  const IntensityImage& first = stack.holograms.front().image;
  const PropagationPlan plan(first.rows(), first.cols(), first.pixel_pitch_um, stack.wavelength_um);
  std::vector<std::vector<double>> amps;
  amps.reserve(m);
  for (const Hologram& h : stack.holograms) amps.push_back(measured_amplitude(h.image));

  const double z0 = stack.holograms.front().z2_um;
  const double k = 2.0 * std::numbers::pi / stack.wavelength_um;
  ComplexField u(first.rows(), first.cols(), first.pixel_pitch_um, stack.wavelength_um);
  const cplx carrier = std::polar(1.0, k * z0);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = amps[0][i] * carrier;

  MhprResult res;
  const double w = cfg.amplitude_weight;
  double z_cur = z0;
  for (int it = 0; it < cfg.iterations; ++it) {
    double residual = 0.0;
    for (std::size_t step = 1; step <= m; ++step) {
      const std::size_t j = step % m;
      const double zj = stack.holograms[j].z2_um;
      if (zj != z_cur) u = plan.propagate(u, zj - z_cur);
      z_cur = zj;
      const std::vector<double>& meas = amps[j];
      double mismatch = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = std::abs(u[i]);
        mismatch += std::abs(a - meas[i]);
        const double a_new = (1.0 - w) * a + w * meas[i];
        u[i] = a > 0.0 ? u[i] * (a_new / a) : cplx(a_new, 0.0) * carrier;
      }
      residual += mismatch / static_cast<double>(u.size());
    }
    if (cfg.record_residuals) res.residual_trace.push_back(residual / static_cast<double>(m));
  }
  if (z_cur != z0) u = plan.propagate(u, z0 - z_cur);
  res.sample_field = plan.propagate(u, -z0);
  for (const cplx& v : res.sample_field.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError("phase retrieval diverged");
  return res;
}

ComplexField make_ground_truth(const HologramStack& stack8) {
  require(stack8.size() == 8, "ground truth needs exactly 8 holograms, got " + std::to_string(stack8.size()));
  MhprConfig cfg;
  cfg.record_residuals = false;
  return mhpr(stack8, cfg).sample_field;
}

void save_residuals_csv(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "iteration,residual\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i + 1 << ',' << trace[i] << '\n';
}

}  // namespace holo
