#include "pwlu/data/export.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pwlu/error.hpp"
#include "pwlu/format.hpp"

namespace pwlu::data {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  }
  return out;
}

}  // namespace

std::vector<double> shape_sample_points(const PwluParams& params,
                                        int samples_per_interval) {
  if (samples_per_interval < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "samples_per_interval must be positive");
  }
  const double d = params.interval_length();
  const double outer_step = d / kExportOuterSamples;
  const double inner_step = d / samples_per_interval;
  std::vector<double> xs;
  xs.reserve(2 * kExportOuterSamples +
             static_cast<std::size_t>(params.n_intervals) *
                 samples_per_interval +
             1);
  for (int i = 0; i < kExportOuterSamples; ++i) {
    xs.push_back(params.left_boundary - d + i * outer_step);
  }
  for (int j = 0; j < params.n_intervals; ++j) {
    const double start = params.grid_point(j);
    for (int k = 0; k < samples_per_interval; ++k) {
      xs.push_back(start + k * inner_step);
    }
  }
  xs.push_back(params.right_boundary);
  for (int i = 1; i <= kExportOuterSamples; ++i) {
    xs.push_back(params.right_boundary + i * outer_step);
  }
  return xs;
}

ActivationShapeExport sample_shapes(const nn::Model& model,
                                    int samples_per_interval) {
  ActivationShapeExport out;
  for (const nn::PwluLayer* layer : model.pwlu_layers()) {
    for (std::size_t u = 0; u < layer->unit_count(); ++u) {
      UnitShape s;
      s.layer = layer->name();
      s.unit = u;
      s.params = layer->unit(u);
      validate(s.params);
      s.xs = shape_sample_points(s.params, samples_per_interval);
      s.ys.reserve(s.xs.size());
      for (double x : s.xs) s.ys.push_back(forward_reference(x, s.params));
      out.units.push_back(std::move(s));
    }
  }
  return out;
}

void write_shapes_csv(const ActivationShapeExport& shapes, std::ostream& out) {
  out << "layer,unit,x,y,b_l,b_r,k_l,k_r\n";
  for (const UnitShape& s : shapes.units) {
    const std::string tail = fmt_double(s.params.left_boundary) + "," +
                             fmt_double(s.params.right_boundary) + "," +
                             fmt_double(s.params.left_slope) + "," +
                             fmt_double(s.params.right_slope);
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      out << s.layer << ',' << s.unit << ',' << fmt_double(s.xs[i]) << ','
          << fmt_double(s.ys[i]) << ',' << tail << '\n';
    }
  }
}

void write_params_json(const ActivationShapeExport& shapes, std::ostream& out) {
  nlohmann::json units = nlohmann::json::array();
  for (const UnitShape& s : shapes.units) {
    units.push_back({{"layer", s.layer},
                     {"unit", s.unit},
                     {"n_intervals", s.params.n_intervals},
                     {"b_l", s.params.left_boundary},
                     {"b_r", s.params.right_boundary},
                     {"k_l", s.params.left_slope},
                     {"k_r", s.params.right_slope},
                     {"y_points", s.params.y_points}});
  }
  out << nlohmann::json{{"format", "pwlu-params"}, {"version", 1},
                        {"units", units}}
             .dump(2)
      << '\n';
}

std::vector<UnitShape> read_params_json(std::istream& in) {
  std::vector<UnitShape> units;
  try {
    const nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.at("format") != "pwlu-params") {
      throw Error(ErrorCode::kFormat, "not a pwlu-params document");
    }
    for (const auto& j : doc.at("units")) {
      UnitShape s;
      s.layer = j.at("layer").get<std::string>();
      s.unit = j.at("unit").get<std::size_t>();
      s.params.n_intervals = j.at("n_intervals").get<int>();
      s.params.left_boundary = j.at("b_l").get<double>();
      s.params.right_boundary = j.at("b_r").get<double>();
      s.params.left_slope = j.at("k_l").get<double>();
      s.params.right_slope = j.at("k_r").get<double>();
      s.params.y_points = j.at("y_points").get<std::vector<double>>();
      validate(s.params);
      units.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("params JSON: ") + e.what());
  }
  return units;
}

ActivationShapeExport export_shapes(const nn::Model& model,
                                    const std::string& dir,
                                    int samples_per_interval) {
  ActivationShapeExport shapes = sample_shapes(model, samples_per_interval);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
  }
  const std::filesystem::path root(dir);
  {
    auto out = open_for_write(root / "shapes.csv");
    write_shapes_csv(shapes, out);
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + (root / "shapes.csv").string());
  }
  {
    auto out = open_for_write(root / "pwlu_params.json");
    write_params_json(shapes, out);
    if (!out) {
      throw Error(ErrorCode::kIo,
                  "failed writing " + (root / "pwlu_params.json").string());
    }
  }
  return shapes;
}

double linear_fit_r2(const UnitShape& shape) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < shape.xs.size(); ++i) {
    const double x = shape.xs[i];
    if (x < shape.params.left_boundary || x > shape.params.right_boundary) {
      continue;
    }
    const double y = shape.ys[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++n;
  }
  if (n < 2) return 1.0;
  const double nn = static_cast<double>(n);
  const double cov = sxy - sx * sy / nn;
  const double var_x = sxx - sx * sx / nn;
  const double var_y = syy - sy * sy / nn;
  if (var_y <= 0.0) return 1.0;  // constant is a line
  if (var_x <= 0.0) return 0.0;
  return std::clamp(cov * cov / (var_x * var_y), 0.0, 1.0);
}

}  // namespace pwlu::data
