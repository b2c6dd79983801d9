#include "pcac/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "pcac/chamfer.hpp"
#include "pcac/errors.hpp"
#include "pcac/sampling.hpp"

namespace pcac {

namespace {

/// Worse of the two directed mean squared nearest-neighbour distances.
double d1_mse(const PointCloud& reference, const PointCloud& test) {
  if (reference.empty() || test.empty()) throw DataError("d1_psnr: empty point cloud");
  const KdTree ref_tree(reference.points), test_tree(test.points);
  double fwd = 0.0, bwd = 0.0;
  for (const Vec3& p : reference.points) fwd += test_tree.nearest(p).second;
  for (const Vec3& p : test.points) bwd += ref_tree.nearest(p).second;
  fwd /= static_cast<double>(reference.size());
  bwd /= static_cast<double>(test.size());
  return std::max(fwd, bwd);
}

double psnr_from_mse(double mse, double peak, const PsnrOptions& opt) {
  const double energy = (opt.factor3 ? 3.0 : 1.0) * peak * peak;
  if (mse == 0.0) return opt.cap_db;
  return std::min(10.0 * std::log10(energy / mse), opt.cap_db);
}

struct CubicFit {
  double center = 0.0;   // fitted in u = psnr − center for conditioning
  double coef[4] = {0.0, 0.0, 0.0, 0.0};

  // Antiderivative of the fitted polynomial evaluated at psnr x.
  double integral_at(double x) const {
    const double u = x - center;
    return u * (coef[0] + u * (coef[1] / 2 + u * (coef[2] / 3 + u * coef[3] / 4)));
  }
};

CubicFit fit_log_rate(const RDCurve& curve) {
  const std::size_t n = curve.points.size();
  if (n < 4) {
    throw DataError("bd_rate: curve '" + curve.label + "' has " + std::to_string(n) +
                    " points, need at least 4");
  }
  CubicFit fit;
  for (const RDPoint& p : curve.points) {
    if (!(p.bpp > 0.0)) throw DataError("bd_rate: nonpositive bpp in curve '" + curve.label + "'");
    fit.center += p.psnr_db;
  }
  fit.center /= static_cast<double>(n);
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = curve.points[i].psnr_db - fit.center;
    a(i, 0) = 1.0;
    a(i, 1) = u;
    a(i, 2) = u * u;
    a(i, 3) = u * u * u;
    y(i) = std::log10(curve.points[i].bpp);
  }
  const Eigen::Vector4d c = a.colPivHouseholderQr().solve(y);
  for (int i = 0; i < 4; ++i) fit.coef[i] = c(i);
  return fit;
}

void psnr_span(const RDCurve& curve, double& lo, double& hi) {
  lo = curve.points.front().psnr_db;
  hi = lo;
  for (const RDPoint& p : curve.points) {
    lo = std::min(lo, p.psnr_db);
    hi = std::max(hi, p.psnr_db);
  }
}

}  // namespace

double d1_psnr(const PointCloud& reference, const PointCloud& test, double peak,
               const PsnrOptions& opt) {
  if (!(std::isfinite(peak) && peak > 0.0)) throw UsageError("d1_psnr: peak must be positive");
  return psnr_from_mse(d1_mse(reference, test), peak, opt);
}

double d1_psnr(const PointCloud& reference, const PointCloud& test, double peak) {
  return d1_psnr(reference, test, peak, PsnrOptions{});
}

double bd_rate(const RDCurve& anchor, const RDCurve& test) {
  const CubicFit fa = fit_log_rate(anchor);
  const CubicFit ft = fit_log_rate(test);
  double a_lo, a_hi, t_lo, t_hi;
  psnr_span(anchor, a_lo, a_hi);
  psnr_span(test, t_lo, t_hi);
  const double lo = std::max(a_lo, t_lo), hi = std::min(a_hi, t_hi);
  if (!(hi > lo)) throw DataError("bd_rate: PSNR ranges do not overlap");
  const double gap = ((ft.integral_at(hi) - ft.integral_at(lo)) -
                      (fa.integral_at(hi) - fa.integral_at(lo))) /
                     (hi - lo);
  return (std::pow(10.0, gap) - 1.0) * 100.0;
}

RDCurve rd_sweep(const std::string& label, const std::vector<SweepModel>& models,
                 const std::vector<DatasetEntry>& clouds, const SweepOptions& opt,
                 std::vector<std::string>* warnings) {
  if (models.empty()) throw UsageError("rd_sweep: no models given");
  if (clouds.empty()) throw DataError("rd_sweep: empty dataset");
  RDCurve curve;
  curve.label = label;
  for (const SweepModel& sm : models) {
    if (sm.model == nullptr) throw UsageError("rd_sweep: null model");
    double bpp_sum = 0.0, psnr_sum = 0.0, mse_sum = 0.0;
    for (const DatasetEntry& entry : clouds) {
      const CompressedObject obj = compress(entry.cloud, *sm.model, opt.expansion);
      const std::size_t denom =
          opt.per_reconstructed_point ? obj.point_count : entry.cloud.size();
      bpp_sum += measure_bpp(obj, denom, opt.include_header);
      const PointCloud rec = decompress(obj, *sm.model);
      const PointCloud ref = to_expanded_frame(entry.cloud, obj.transform);
      if (opt.distortion_mean) {
        mse_sum += d1_mse(ref, rec);
      } else {
        psnr_sum += d1_psnr(ref, rec, obj.transform.expansion, opt.psnr);
      }
    }
    const double inv = 1.0 / static_cast<double>(clouds.size());
    RDPoint pt;
    pt.bpp = bpp_sum * inv;
    pt.psnr_db = opt.distortion_mean
                     ? psnr_from_mse(mse_sum * inv, opt.expansion, opt.psnr)
                     : psnr_sum * inv;
    pt.tier = sm.model->config.input_points;
    pt.lambda = sm.lambda;
    pt.n_clouds = clouds.size();
    curve.points.push_back(pt);
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RDPoint& x, const RDPoint& y) { return x.bpp < y.bpp; });
  if (warnings != nullptr) {
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      if (curve.points[i].psnr_db < curve.points[i - 1].psnr_db) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%s: PSNR drops %.3f dB between %.5g and %.5g bpp", label.c_str(),
                      curve.points[i - 1].psnr_db - curve.points[i].psnr_db,
                      curve.points[i - 1].bpp, curve.points[i].bpp);
        warnings->push_back(buf);
      }
    }
  }
  return curve;
}

RDCurve grid_baseline_curve(const std::string& label, const std::vector<std::size_t>& cell_sweep,
                            const std::vector<DatasetEntry>& clouds, const SweepOptions& opt) {
  if (cell_sweep.empty()) throw UsageError("grid_baseline_curve: empty cell sweep");
  if (clouds.empty()) throw DataError("grid_baseline_curve: empty dataset");
  RDCurve curve;
  curve.label = label;
  const double e = opt.expansion;
  for (const std::size_t cells : cell_sweep) {
    if (cells == 0) throw UsageError("grid_baseline_curve: cell count must be positive");
    // Indices run 0..cells inclusive (the +e face lands on `cells`), so each
    // axis costs bit_width(cells) raw bits.
    const double bits_per_cell = 3.0 * static_cast<double>(std::bit_width(cells));
    double bpp_sum = 0.0, psnr_sum = 0.0, mse_sum = 0.0;
    for (const DatasetEntry& entry : clouds) {
      PointCloud normalized;
      NormalizationTransform t = normalize_unit_sphere(entry.cloud, normalized);
      t.expansion = e;
      const PointCloud expanded = apply_expansion(normalized, e);
      const Vec3 shift = {-e, -e, -e};
      const double s = static_cast<double>(cells) / (2.0 * e);
      const PointCloud occupied = grid_quantize_merge(expanded, shift, s);
      PointCloud rec;
      rec.points.reserve(occupied.size());
      for (const Vec3& idx : occupied.points) {
        rec.points.push_back({(idx[0] + 0.5) / s + shift[0], (idx[1] + 0.5) / s + shift[1],
                              (idx[2] + 0.5) / s + shift[2]});
      }
      const std::size_t denom = opt.per_reconstructed_point ? rec.size() : entry.cloud.size();
      bpp_sum += bits_per_cell * static_cast<double>(occupied.size()) /
                 static_cast<double>(denom);
      if (opt.distortion_mean) {
        mse_sum += d1_mse(expanded, rec);
      } else {
        psnr_sum += d1_psnr(expanded, rec, e, opt.psnr);
      }
    }
    const double inv = 1.0 / static_cast<double>(clouds.size());
    RDPoint pt;
    pt.bpp = bpp_sum * inv;
    pt.psnr_db = opt.distortion_mean ? psnr_from_mse(mse_sum * inv, e, opt.psnr)
                                     : psnr_sum * inv;
    pt.tier = cells;
    pt.lambda = 0.0;
    pt.n_clouds = clouds.size();
    curve.points.push_back(pt);
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RDPoint& x, const RDPoint& y) { return x.bpp < y.bpp; });
  return curve;
}

std::string rd_csv(const std::vector<RDCurve>& curves) {
  std::string out = "label,tier,lambda,bpp,psnr_db,n_clouds\n";
  for (const RDCurve& curve : curves) {
    if (curve.label.find(',') != std::string::npos) {
      throw DataError("rd_csv: label '" + curve.label + "' contains a comma");
    }
    for (const RDPoint& p : curve.points) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%zu,%.10g,%.10g,%.10g,%zu\n", curve.label.c_str(),
                    p.tier, p.lambda, p.bpp, p.psnr_db, p.n_clouds);
      out += buf;
    }
  }
  return out;
}

}  // namespace pcac
