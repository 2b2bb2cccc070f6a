#include "gridrisk/network_model.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace gridrisk {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError(path + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto key : allowed) known = known || it.key() == key;
    if (!known) fail(path + "." + it.key(), "unknown key");
  }
}

const json& require(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing key");
  return *it;
}

double require_number(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected number");
  return v.get<double>();
}

int require_int(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected integer");
  return v.get<int>();
}

bool require_bool(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_boolean()) fail(path + "." + key, "expected boolean");
  return v.get<bool>();
}

const json& require_array(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_array()) fail(path + "." + key, "expected array");
  return v;
}

MeasurementKind parse_kind(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected string");
  const auto s = v.get<std::string>();
  if (s == "flow_from") return MeasurementKind::FlowFrom;
  if (s == "flow_to") return MeasurementKind::FlowTo;
  if (s == "injection") return MeasurementKind::Injection;
  fail(path, "unknown measurement kind '" + s + "'");
}

}  // namespace

std::string_view to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::FlowFrom:
      return "flow_from";
    case MeasurementKind::FlowTo:
      return "flow_to";
    case MeasurementKind::Injection:
      return "injection";
  }
  return "?";
}

GridCase load_case(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("case: parse error: ") + e.what());
  }
  if (!root.is_object()) fail("case", "expected object");
  reject_unknown_keys(root, "case", {"base_mva", "buses", "lines", "measurements"});

  GridCase out;
  out.base_mva = require_number(root, "case", "base_mva");

  const json& buses = require_array(root, "case", "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string path = "buses[" + std::to_string(i) + "]";
    if (!buses[i].is_object()) fail(path, "expected object");
    reject_unknown_keys(buses[i], path, {"id", "reference"});
    out.buses.push_back({require_int(buses[i], path, "id"), require_bool(buses[i], path, "reference")});
  }

  const json& lines = require_array(root, "case", "lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string path = "lines[" + std::to_string(i) + "]";
    if (!lines[i].is_object()) fail(path, "expected object");
    reject_unknown_keys(lines[i], path, {"id", "from", "to", "reactance"});
    out.lines.push_back({require_int(lines[i], path, "id"), require_int(lines[i], path, "from"),
                         require_int(lines[i], path, "to"),
                         require_number(lines[i], path, "reactance")});
  }

  const json& meas = require_array(root, "case", "measurements");
  for (std::size_t i = 0; i < meas.size(); ++i) {
    const std::string path = "measurements[" + std::to_string(i) + "]";
    if (!meas[i].is_object()) fail(path, "expected object");
    reject_unknown_keys(meas[i], path, {"kind", "element", "sigma"});
    out.measurements.push_back({parse_kind(require(meas[i], path, "kind"), path + ".kind"),
                                require_int(meas[i], path, "element"),
                                require_number(meas[i], path, "sigma")});
  }

  validate_case(out);
  return out;
}

GridCase load_case_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("case not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_case(buf.str());
}

void validate_case(const GridCase& c) {
  if (!(c.base_mva > 0.0)) fail("case.base_mva", "non-positive base power");
  if (c.buses.size() < 2) fail("case.buses", "at least two buses required");

  std::set<int> bus_ids;
  int references = 0;
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    if (!bus_ids.insert(c.buses[i].id).second)
      fail("buses[" + std::to_string(i) + "].id", "duplicate bus id " + std::to_string(c.buses[i].id));
    references += c.buses[i].reference ? 1 : 0;
  }
  if (references == 0) fail("case.buses", "missing reference bus");
  if (references > 1) fail("case.buses", "more than one reference bus");

  if (c.lines.empty()) fail("case.lines", "no lines");
  std::set<int> line_ids;
  for (std::size_t i = 0; i < c.lines.size(); ++i) {
    const std::string path = "lines[" + std::to_string(i) + "]";
    const Line& l = c.lines[i];
    if (!line_ids.insert(l.id).second) fail(path + ".id", "duplicate line id " + std::to_string(l.id));
    if (!bus_ids.count(l.from_bus)) fail(path + ".from", "undeclared bus " + std::to_string(l.from_bus));
    if (!bus_ids.count(l.to_bus)) fail(path + ".to", "undeclared bus " + std::to_string(l.to_bus));
    if (l.from_bus == l.to_bus) fail(path, "line endpoints coincide");
    if (!(l.reactance > 0.0)) fail(path + ".reactance", "non-positive reactance");
  }

  if (c.measurements.empty()) fail("case.measurements", "measurement plan is empty");
  for (std::size_t i = 0; i < c.measurements.size(); ++i) {
    const std::string path = "measurements[" + std::to_string(i) + "]";
    const MeasurementSpec& s = c.measurements[i];
    const bool is_flow = s.kind != MeasurementKind::Injection;
    if (is_flow && !line_ids.count(s.element))
      fail(path + ".element", "undeclared line " + std::to_string(s.element));
    if (!is_flow && !bus_ids.count(s.element))
      fail(path + ".element", "undeclared bus " + std::to_string(s.element));
    if (!(s.sigma > 0.0)) fail(path + ".sigma", "non-positive sigma");
  }
}

Matrix GridModel::covariance() const { return sigma_.array().square().matrix().asDiagonal(); }

std::vector<std::size_t> GridModel::injection_rows() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i].kind == MeasurementKind::Injection) rows.push_back(i);
  return rows;
}

Matrix GridModel::assemble(const Vector& line_weights) const {
  if (static_cast<std::size_t>(line_weights.size()) != line_count())
    throw DimensionError("assemble: expected " + std::to_string(line_count()) + " line weights");
  const Matrix WBt = line_weights.asDiagonal() * B_.transpose();
  Matrix stacked(2 * WBt.rows() + B0_.rows(), WBt.cols());
  stacked << WBt, -WBt, B0_ * WBt;
  return P_ * stacked;
}

GridModel build_model(const GridCase& c) {
  validate_case(c);
  GridModel model;
  model.base_mva_ = c.base_mva;

  const std::size_t buses = c.buses.size();
  const std::size_t lines = c.lines.size();
  std::unordered_map<int, std::size_t> bus_pos;
  std::unordered_map<int, std::size_t> line_pos;
  for (std::size_t i = 0; i < buses; ++i) {
    bus_pos[c.buses[i].id] = i;
    if (c.buses[i].reference) model.reference_index_ = i;
  }
  for (std::size_t k = 0; k < lines; ++k) line_pos[c.lines[k].id] = k;

  model.B0_ = Matrix::Zero(buses, lines);
  model.weights_.resize(lines);
  for (std::size_t k = 0; k < lines; ++k) {
    model.B0_(bus_pos[c.lines[k].from_bus], k) = 1.0;
    model.B0_(bus_pos[c.lines[k].to_bus], k) = -1.0;
    model.weights_(k) = 1.0 / c.lines[k].reactance;
  }

  model.B_.resize(buses - 1, lines);
  for (std::size_t i = 0, r = 0; i < buses; ++i) {
    if (i == model.reference_index_) continue;
    model.B_.row(r++) = model.B0_.row(i);
  }

  const std::size_t m = c.measurements.size();
  model.P_ = Matrix::Zero(m, 2 * lines + buses);
  model.sigma_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const MeasurementSpec& s = c.measurements[i];
    std::size_t index = 0;
    std::size_t column = 0;
    switch (s.kind) {
      case MeasurementKind::FlowFrom:
        index = line_pos[s.element];
        column = index;
        break;
      case MeasurementKind::FlowTo:
        index = line_pos[s.element];
        column = lines + index;
        break;
      case MeasurementKind::Injection:
        index = bus_pos[s.element];
        column = 2 * lines + index;
        break;
    }
    model.P_(i, column) = 1.0;
    model.sigma_(i) = s.sigma;
    model.labels_.push_back({s.kind, s.element, index});
  }

  model.H_ = model.assemble(model.weights_);
  const std::size_t rank = numerical_rank(model.H_);
  if (rank < model.state_dim())
    throw UnobservableError("measurement plan is unobservable: rank(H) = " + std::to_string(rank) +
                            " < n = " + std::to_string(model.state_dim()));
  return model;
}

std::size_t numerical_rank(const Matrix& A) {
  if (A.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-8);
  return static_cast<std::size_t>(qr.rank());
}

Matrix mask_rows(const Matrix& H, const AvailabilityMask& d) {
  if (d.size() != static_cast<std::size_t>(H.rows()))
    throw DimensionError("availability vector length " + std::to_string(d.size()) +
                         " does not match " + std::to_string(H.rows()) + " measurements");
  Matrix out = H;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i]) out.row(static_cast<Eigen::Index>(i)).setZero();
  return out;
}

bool is_observable(const Matrix& H, const AvailabilityMask& d) {
  return numerical_rank(mask_rows(H, d)) == static_cast<std::size_t>(H.cols());
}

MeasurementSnapshot synthesize_measurements(const Matrix& H, const Vector& sigma,
                                            const Vector& x_true, std::uint64_t seed) {
  if (x_true.size() != H.cols())
    throw DimensionError("state vector has length " + std::to_string(x_true.size()) + ", expected " +
                         std::to_string(H.cols()));
  if (sigma.size() != H.rows()) throw DimensionError("sigma length does not match measurement count");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MeasurementSnapshot snap;
  snap.z = H * x_true;
  for (Eigen::Index i = 0; i < snap.z.size(); ++i) snap.z(i) += sigma(i) * normal(rng);
  snap.x_true = x_true;
  snap.noise_seed = seed;
  return snap;
}

MeasurementSnapshot synthesize_measurements(const GridModel& model, const Vector& x_true,
                                            std::uint64_t seed) {
  return synthesize_measurements(model.H(), model.sigma(), x_true, seed);
}

}  // namespace gridrisk
