#include "holo/propagation.hpp"

#include <cmath>
#include <numbers>

#include "holo/fft.hpp"

namespace holo {

namespace {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

PropagationPlan::PropagationPlan(int rows, int cols, double pixel_pitch_um, double wavelength_um, bool pad_pow2)
    : rows_(rows),
      cols_(cols),
      pad_rows_(pad_pow2 ? next_pow2(2 * rows) : rows),
      pad_cols_(pad_pow2 ? next_pow2(2 * cols) : cols),
      pitch_(pixel_pitch_um),
      wavelength_(wavelength_um) {
  require(rows >= 2 && cols >= 2, "propagation grid must be at least 2x2");
  require(pixel_pitch_um > 0.0 && wavelength_um > 0.0, "pitch and wavelength must be positive");
  kz_.resize(static_cast<std::size_t>(pad_rows_) * pad_cols_);
  const double k = 2.0 * std::numbers::pi / wavelength_;
  for (int ky = 0; ky < pad_rows_; ++ky) {
    const double fy = fft::signed_index(ky, pad_rows_) / (pad_rows_ * pitch_);
    for (int kx = 0; kx < pad_cols_; ++kx) {
      const double fx = fft::signed_index(kx, pad_cols_) / (pad_cols_ * pitch_);
      const double s = 1.0 - (wavelength_ * fx) * (wavelength_ * fx) - (wavelength_ * fy) * (wavelength_ * fy);
      kz_[static_cast<std::size_t>(ky) * pad_cols_ + kx] = s >= 0.0 ? k * std::sqrt(s) : -1.0;
    }
  }
}

bool PropagationPlan::matches(const ComplexField& f) const {
  return f.rows() == rows_ && f.cols() == cols_ && f.pixel_pitch_um == pitch_ && f.wavelength_um == wavelength_;
}

cplx PropagationPlan::transfer(int ky, int kx, double dz_um) const {
  const double kz = kz_[static_cast<std::size_t>(ky) * pad_cols_ + kx];
  if (kz < 0.0) return {0.0, 0.0};
  return std::polar(1.0, kz * dz_um);
}

void PropagationPlan::apply_to_spectrum(Grid<cplx>& spectrum, double dz_um) const {
  require(spectrum.rows() == pad_rows_ && spectrum.cols() == pad_cols_, "spectrum does not match plan geometry");
  for (std::size_t i = 0; i < kz_.size(); ++i) {
    spectrum[i] = kz_[i] < 0.0 ? cplx(0.0, 0.0) : spectrum[i] * std::polar(1.0, kz_[i] * dz_um);
  }
}

ComplexField PropagationPlan::propagate(const ComplexField& field, double dz_um) const {
  if (!matches(field)) throw InputError("field geometry does not match propagation plan");
  require(std::isfinite(dz_um), "propagation distance must be finite");

  Grid<cplx> work(pad_rows_, pad_cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) work(r, c) = field(r, c);
  fft::forward(work);
  apply_to_spectrum(work, dz_um);
  fft::inverse(work);

  ComplexField out(rows_, cols_, field.pixel_pitch_um, field.wavelength_um);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out(r, c) = work(r, c);
  return out;
}

ComplexField propagate(const ComplexField& field, double dz_um, bool pad_pow2) {
  validate(field);
  return PropagationPlan(field, pad_pow2).propagate(field, dz_um);
}

std::vector<ComplexField> back_propagate_stack(const HologramStack& stack, double dz_um) {
  validate(stack);
  const auto& first = stack.holograms.front().image;
  const PropagationPlan plan(first.rows(), first.cols(), first.pixel_pitch_um, stack.wavelength_um);
  std::vector<ComplexField> out;
  out.reserve(stack.size());
  for (const Hologram& h : stack.holograms) {
    out.push_back(plan.propagate(field_from_intensity(h.image, stack.wavelength_um), -dz_um));
  }
  return out;
}

ComplexField band_limit(const ComplexField& field, double fraction_of_cutoff) {
  validate(field);
  require(fraction_of_cutoff > 0.0, "band-limit fraction must be positive");
  Grid<cplx> spec = field;
  fft::forward(spec);
  const double lim = fraction_of_cutoff / field.wavelength_um;
  for (int ky = 0; ky < field.rows(); ++ky) {
    const double fy = fft::signed_index(ky, field.rows()) / (field.rows() * field.pixel_pitch_um);
    for (int kx = 0; kx < field.cols(); ++kx) {
      const double fx = fft::signed_index(kx, field.cols()) / (field.cols() * field.pixel_pitch_um);
      // Nyquist rows/cols have no unique sign; drop them so real inputs stay Hermitian.
      const bool nyquist = (field.rows() % 2 == 0 && ky == field.rows() / 2) ||
                           (field.cols() % 2 == 0 && kx == field.cols() / 2);
      if (nyquist || fx * fx + fy * fy >= lim * lim) spec(ky, kx) = 0.0;
    }
  }
  fft::inverse(spec);
  return ComplexField(std::move(spec), field.pixel_pitch_um, field.wavelength_um);
}

}  // namespace holo
