#pragma once

#include <vector>

#include "bhtrace/model.hpp"

namespace bhtrace {

/// Uniform energy grid; values are sampled at bin centres.
struct DensityGrid {
  double e_min = 0.0;
  double e_max = 1.0;
  int n_bins = 1;
  std::vector<double> values;

  DensityGrid() = default;
  DensityGrid(double lo, double hi, int bins);

  double width() const { return (e_max - e_min) / n_bins; }
  double center(int i) const { return e_min + (i + 0.5) * width(); }
  double integral() const;
  bool same_layout(const DensityGrid& o) const;
};

enum class Kernel { Gaussian, Lorentzian };

/// Unit-mass Gaussian of standard deviation s.
double gaussian(double x, double s);

/// rho(E) = sum_n g(E - E_n). Lorentzian uses s as the half width.
DensityGrid smoothed_dos(const Spectrum& spectrum, const DensityGrid& grid,
                         double sigma, Kernel kernel = Kernel::Gaussian);

/// Relative L2 distance ||a-b|| / ||b|| restricted to [lo, hi].
double windowed_relative_l2(const DensityGrid& a, const DensityGrid& b,
                            double lo, double hi);

}  // namespace bhtrace
