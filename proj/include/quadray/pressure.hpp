#pragma once

#include "quadray/periodic_orbits.hpp"
#include "quadray/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quadray {

enum class PressureMode { periodic, tree };

std::string to_string(PressureMode m);

struct PressureEstimate {
    double t = 0.0;
    int n = 0;
    double log_sum = 0.0;
    double value = 0.0; // log_sum / n
    PressureMode mode = PressureMode::periodic;
    std::optional<cplx> basepoint; // tree mode only
    std::size_t terms = 0;
    bool negative_t = false;      // t < 0 is outside the range the estimators are meant for
    std::size_t excluded_attracting = 0; // periodic mode: points dropped as off J
    std::size_t indifferent_kept = 0;    // periodic mode: indifferent candidates summed
};

/// (1/n) log sum |(f^n)'(z)|^{-t} over Fix(f^n) minus attracting cycles.
PressureEstimate periodic_pressure_estimate(OrbitCatalog& catalog, double t, int n);
PressureEstimate periodic_pressure_estimate(const QuadraticMap& map, double t, int n, const PrecisionConfig& cfg);

/// (1/n) log sum |(f^n)'(x)|^{-t} over the 2^n preimages x of z.
PressureEstimate tree_pressure_estimate(const QuadraticMap& map, cplx z, double t, int n,
                                        const PrecisionConfig& cfg);

/// Point of potential 0.01 on the ray of angle 1/7.
cplx default_tree_basepoint(const QuadraticMap& map);

struct PressureCurve {
    std::vector<double> t_grid;
    int n = 0;
    std::vector<PressureEstimate> periodic;      // level n
    std::vector<PressureEstimate> tree;          // level n
    std::vector<PressureEstimate> periodic_prev; // level n-1 (empty when n == 1)
    std::vector<PressureEstimate> tree_prev;
    double discrepancy = 0.0;      // max_t |periodic - tree| at n
    double discrepancy_prev = 0.0; // same at n-1
    bool trend_non_increasing = true;
};

PressureCurve pressure_comparison(const QuadraticMap& map, cplx z, std::span<const double> t_grid, int n,
                                  const PrecisionConfig& cfg);
PressureCurve pressure_comparison(OrbitCatalog& catalog, cplx z, std::span<const double> t_grid, int n);

} // namespace quadray
