#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pcac/codec.hpp"
#include "pcac/dataset.hpp"
#include "pcac/network.hpp"
#include "pcac/point_cloud.hpp"

namespace pcac {

struct PsnrOptions {
  double cap_db = 999.0;  // returned for an exact match, and an upper clamp
  bool factor3 = true;    // use 3·peak² as the signal energy
};

/// Point-to-point geometry PSNR. Each direction averages the squared
/// nearest-neighbour distance; the worse (larger) of the two means is the
/// error. PSNR = 10·log10(3·peak²/mse), clamped to cap_db.
double d1_psnr(const PointCloud& reference, const PointCloud& test, double peak,
               const PsnrOptions& opt);
double d1_psnr(const PointCloud& reference, const PointCloud& test, double peak);

/// One measured rate-distortion point, averaged over a test set. For grid
/// baseline curves `tier` holds the cell count and lambda is 0.
struct RDPoint {
  double bpp = 0.0;
  double psnr_db = 0.0;
  std::size_t tier = 0;
  double lambda = 0.0;
  std::size_t n_clouds = 0;
};

struct RDCurve {
  std::string label;
  std::vector<RDPoint> points;  // sorted by increasing bpp
};

/// Bjøntegaard rate delta in percent between two curves: cubic fit of
/// log10(bpp) against PSNR for each curve, mean vertical gap over the common
/// PSNR interval, returned as (10^gap − 1)·100. Negative means `test` spends
/// fewer bits than `anchor` at equal quality. Requires at least four points
/// per curve and overlapping PSNR ranges.
double bd_rate(const RDCurve& anchor, const RDCurve& test);

struct SweepOptions {
  double expansion = 1023.0;
  bool include_header = false;          // charge header bytes to bpp
  bool per_reconstructed_point = false; // divide by m instead of the original count
  bool distortion_mean = false;         // average MSEs, then one dB conversion
  PsnrOptions psnr;
};

/// A model to evaluate inside a sweep, with the labels its CSV row carries.
struct SweepModel {
  double lambda = 0.0;
  ModelParameters* model = nullptr;
};

/// Compress + decompress every cloud with every model and average each
/// model's rate and PSNR over the set (PSNR averaged in dB by default).
/// Points come back sorted by bpp. Nonmonotone PSNR along the sorted curve
/// is reported through `warnings`, never an error.
RDCurve rd_sweep(const std::string& label, const std::vector<SweepModel>& models,
                 const std::vector<DatasetEntry>& clouds, const SweepOptions& opt,
                 std::vector<std::string>* warnings = nullptr);

/// Learning-free anchor: normalize, expand, snap to a uniform grid with
/// `cells` cells across the expanded diameter, merge duplicate cells, code
/// each occupied cell with 3·ceil(log2(cells+1)) raw bits, reconstruct cell
/// centers. One RD point per sweep value.
RDCurve grid_baseline_curve(const std::string& label, const std::vector<std::size_t>& cell_sweep,
                            const std::vector<DatasetEntry>& clouds, const SweepOptions& opt);

/// CSV with the fixed schema: label,tier,lambda,bpp,psnr_db,n_clouds.
std::string rd_csv(const std::vector<RDCurve>& curves);

}  // namespace pcac
