#include "doctest.h"

#include <cmath>

#include "holo/autofocus.hpp"
#include "holo/propagation.hpp"
#include "holo/simulator.hpp"
#include "support.hpp"

using namespace holo;

namespace {

Hologram simulated(sim::SceneKind kind, std::uint64_t seed, double z2, double noise = 0.0) {
  sim::SceneSpec scene;
  scene.kind = kind;
  scene.seed = seed;
  OpticalConfig opt;
  sim::AcquisitionSpec acq;
  acq.z2_list = {z2};
  acq.noise_sigma = noise;
  acq.seed = seed + 100;
  return sim::acquire(sim::make_object(scene, 128, 128, opt), acq).holograms.at(0);
}

}  // namespace

TEST_CASE("a constant field has zero sharpness") {
  ComplexField f(8, 8, 1.12, 0.530);
  for (auto& v : f.storage()) v = cplx(0.3, 0.4);
  CHECK(sharpness(f) == 0.0);
  CHECK_THROWS_AS(sharpness(ComplexField(2, 8, 1.12, 0.530)), InputError);
}

TEST_CASE("the in-focus object is sharper than its defocused version") {
  sim::SceneSpec scene;
  scene.kind = sim::SceneKind::amplitude_bars;
  scene.seed = 2;
  ComplexField obj = sim::make_object(scene, 128, 128, OpticalConfig{});
  CHECK(sharpness(obj) > sharpness(propagate(obj, 100.0)));
}

TEST_CASE("sharpness ignores a global amplitude factor") {
  ComplexField f = test::random_field(32, 32, 7);
  ComplexField g = f;
  for (auto& v : g.storage()) v *= 3.7;
  CHECK(sharpness(g) == doctest::Approx(sharpness(f)).epsilon(1e-12));
}

TEST_CASE("autofocus recovers z2 = 500 within 2 um") {
  sim::SceneSpec scene;
  scene.feature_px = 2.0;
  scene.amp_min = 0.8;
  scene.phase_max = 0.5;
  scene.seed = 11;
  sim::AcquisitionSpec acq;
  acq.z2_list = {500.0};
  Hologram h = sim::acquire(sim::make_object(scene, 256, 256, OpticalConfig{}), acq).holograms.at(0);
  FocusResult r = autofocus(h, 0.530, 400.0, 600.0, 10.0);
  CHECK(std::abs(r.z_hat - 500.0) <= 2.0);
  CHECK_FALSE(r.plateau);
  CHECK(r.z_hat >= 400.0);
  CHECK(r.z_hat <= 600.0);
  double best = 0.0;
  for (auto [z, s] : r.scan_trace) best = std::max(best, s);
  CHECK(r.score == doctest::Approx(best));

  FocusResult again = autofocus(h, 0.530, 400.0, 600.0, 10.0);
  CHECK(again.z_hat == r.z_hat);
}

TEST_CASE("autofocus is invariant to the hologram intensity scale") {
  Hologram h = simulated(sim::SceneKind::phase_blobs, 4, 470.0);
  Hologram g = h;
  for (auto& v : g.image.storage()) v *= 2.5;
  CHECK(autofocus(g, 0.530, 400.0, 600.0, 10.0).z_hat ==
        doctest::Approx(autofocus(h, 0.530, 400.0, 600.0, 10.0).z_hat).epsilon(1e-9));
}

TEST_CASE("a uniform hologram reports a plateau with score 0") {
  Hologram h{IntensityImage(32, 32, 1.12, 1.0), 500.0};
  FocusResult r = autofocus(h, 0.530, 400.0, 600.0, 10.0);
  CHECK(r.plateau);
  CHECK(r.score == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.z_hat == 400.0);
}

TEST_CASE("degenerate ranges and steps are rejected") {
  Hologram h{IntensityImage(32, 32, 1.12, 1.0), 500.0};
  CHECK_THROWS_AS(autofocus(h, 0.530, 500.0, 500.05, 0.01), InputError);
  CHECK_THROWS_AS(autofocus(h, 0.530, 600.0, 400.0, 10.0), InputError);
  CHECK_THROWS_AS(autofocus(h, 0.530, 400.0, 600.0, 0.0), InputError);
  CHECK_THROWS_AS(autofocus(h, 0.530, 400.0, 600.0, 250.0), InputError);
}
