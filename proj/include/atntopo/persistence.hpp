#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "atntopo/types.hpp"

namespace atntopo {

struct Bar {
    double birth = 0.0;
    double death = 0.0;
    int dim = 0;

    double length() const { return death - birth; }
    bool finite() const { return death != std::numeric_limits<double>::infinity(); }
    bool operator==(const Bar&) const = default;
};

struct Barcode {
    std::vector<Bar> bars;

    std::vector<Bar> dimension(int dim) const;
    std::size_t count(int dim) const;
};

inline const std::vector<double> kDefaultBarThresholds{0.25, 0.5, 0.75};

/// H0 bars (0, w) for every minimum-spanning-tree weight w, longest first.
/// The essential class is appended as (0, inf) only on request.
Barcode h0_barcode(const DistanceMatrix& d, bool include_essential = false);

/// H1 bars of the Vietoris-Rips (flag) filtration of `d`, longest first.
/// Only bars with death > birth are reported.
Barcode h1_barcode(const DistanceMatrix& d);

/// h0_barcode followed by h1_barcode.
Barcode full_barcode(const DistanceMatrix& d);

/// Sum and mean of H0 bar lengths (= total and mean MST weight).
double h0_sum(const DistanceMatrix& d);
double h0_mean(const DistanceMatrix& d);

struct DimensionStats {
    std::size_t count = 0;
    double sum = 0.0;
    double mean = 0.0;
    double variance = 0.0;  // population variance of bar lengths
    double entropy = 0.0;   // -sum p ln p, p = length / total length
    std::vector<std::size_t> born_after;   // bars with birth > t, per threshold
    std::vector<std::size_t> dead_before;  // bars with death < t, per threshold
};

struct BarcodeStats {
    std::vector<double> thresholds;
    DimensionStats h0;
    DimensionStats h1;
};

/// Statistics of finite bars per dimension; infinite bars are ignored.
BarcodeStats barcode_stats(const Barcode& b, std::span<const double> thresholds = kDefaultBarThresholds);

}  // namespace atntopo
