#pragma once

// Activation-shape export for plotting learned PWLUs.
//
// shapes.csv has one row per sampled point:
//   layer,unit,x,y,b_l,b_r,k_l,k_r
// Each unit is sampled over [B_L - d, B_R + d]: 8 points in each outer
// interval and `samples_per_interval` points per inner interval, with every
// demarcation point (including B_L and B_R) hit exactly. Numbers are
// printed in shortest round-trip form, so re-evaluating the exported
// parameters reproduces y bit-for-bit.
//
// pwlu_params.json holds the raw parameters of every unit.

#include <iosfwd>
#include <string>
#include <vector>

#include "pwlu/kernel.hpp"
#include "pwlu/nn/model.hpp"

namespace pwlu::data {

inline constexpr int kExportSamplesPerInterval = 16;
inline constexpr int kExportOuterSamples = 8;

struct UnitShape {
  std::string layer;
  std::size_t unit = 0;
  PwluParams params;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct ActivationShapeExport {
  std::vector<UnitShape> units;
};

std::vector<double> shape_sample_points(const PwluParams& params,
                                        int samples_per_interval);

ActivationShapeExport sample_shapes(
    const nn::Model& model,
    int samples_per_interval = kExportSamplesPerInterval);

void write_shapes_csv(const ActivationShapeExport& shapes, std::ostream& out);
void write_params_json(const ActivationShapeExport& shapes, std::ostream& out);
// Units (layer, unit, params) from a params JSON document; xs/ys are empty.
std::vector<UnitShape> read_params_json(std::istream& in);

// Writes <dir>/shapes.csv and <dir>/pwlu_params.json.
ActivationShapeExport export_shapes(
    const nn::Model& model, const std::string& dir,
    int samples_per_interval = kExportSamplesPerInterval);

// Coefficient of determination of a least-squares line through the unit's
// samples inside [B_L, B_R]. 1 means exactly linear there.
double linear_fit_r2(const UnitShape& shape);

}  // namespace pwlu::data
