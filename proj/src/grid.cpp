#include "bhtrace/grid.hpp"

#include <cmath>
#include <numbers>

namespace bhtrace {

DensityGrid::DensityGrid(double lo, double hi, int bins)
    : e_min(lo), e_max(hi), n_bins(bins), values(bins > 0 ? bins : 0, 0.0) {
  if (!(bins > 0) || !(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error("invalid_grid", "grid needs e_max > e_min and n_bins > 0");
}

double DensityGrid::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * width();
}

bool DensityGrid::same_layout(const DensityGrid& o) const {
  return n_bins == o.n_bins && e_min == o.e_min && e_max == o.e_max;
}

double gaussian(double x, double s) {
  return std::exp(-0.5 * (x / s) * (x / s)) / (s * std::sqrt(2.0 * std::numbers::pi));
}

DensityGrid smoothed_dos(const Spectrum& spectrum, const DensityGrid& grid, double sigma,
                         Kernel kernel) {
  if (spectrum.energies.empty()) throw Error("empty_spectrum", "spectrum has no levels");
  if (!(sigma > 0.0)) throw Error("invalid_sigma", "smoothing width must be positive");
  DensityGrid out(grid.e_min, grid.e_max, grid.n_bins);
  for (int i = 0; i < out.n_bins; ++i) {
    const double E = out.center(i);
    double s = 0.0;
    for (double En : spectrum.energies) {
      if (kernel == Kernel::Gaussian) {
        double x = E - En;
        if (std::abs(x) < 40.0 * sigma) s += gaussian(x, sigma);
      } else {
        double x = E - En;
        s += sigma / (std::numbers::pi * (x * x + sigma * sigma));
      }
    }
    out.values[i] = s;
  }
  return out;
}

double windowed_relative_l2(const DensityGrid& a, const DensityGrid& b, double lo, double hi) {
  if (!a.same_layout(b)) throw Error("grid_mismatch", "grids differ");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < a.n_bins; ++i) {
    double E = a.center(i);
    if (E < lo || E > hi) continue;
    double d = a.values[i] - b.values[i];
    num += d * d;
    den += b.values[i] * b.values[i];
  }
  if (den == 0.0) throw Error("empty_window", "reference vanishes on the window");
  return std::sqrt(num / den);
}

}  // namespace bhtrace
