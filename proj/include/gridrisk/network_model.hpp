#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridrisk/common.hpp"

namespace gridrisk {

enum class MeasurementKind { FlowFrom, FlowTo, Injection };

std::string_view to_string(MeasurementKind kind);

struct Bus {
  int id = 0;
  bool reference = false;
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // per-unit
};

struct MeasurementSpec {
  MeasurementKind kind = MeasurementKind::Injection;
  int element = 0;  // line id for flows, bus id for injections
  double sigma = 0.0;
};

struct GridCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<MeasurementSpec> measurements;
};

/// Parses and validates a case document. Errors are InputError with a field
/// path prefix, e.g. "lines[3].reactance: non-positive reactance".
GridCase load_case(std::string_view document);
GridCase load_case_file(const std::filesystem::path& path);

/// Throws InputError on the first violated case invariant.
void validate_case(const GridCase& grid_case);

struct MeasurementLabel {
  MeasurementKind kind;
  int element_id;
  std::size_t element_index;  // position of the line/bus in the case
};

/// DC measurement model z = Hx + e with H = P·[WBᵀ; −WBᵀ; B₀WBᵀ].
///
/// State x holds the phase angles of every non-reference bus, in case order.
/// Immutable after construction.
class GridModel {
 public:
  std::size_t state_dim() const { return static_cast<std::size_t>(B_.rows()); }
  std::size_t line_count() const { return static_cast<std::size_t>(B0_.cols()); }
  std::size_t measurement_count() const { return static_cast<std::size_t>(H_.rows()); }
  std::size_t bus_count() const { return static_cast<std::size_t>(B0_.rows()); }

  const Matrix& H() const { return H_; }
  const Vector& sigma() const { return sigma_; }
  Matrix covariance() const;
  const Matrix& incidence_full() const { return B0_; }
  const Matrix& incidence_truncated() const { return B_; }
  const Vector& line_weights() const { return weights_; }
  Matrix line_weight_matrix() const { return weights_.asDiagonal(); }
  const Matrix& selector() const { return P_; }
  const std::vector<MeasurementLabel>& labels() const { return labels_; }
  std::size_t reference_bus_index() const { return reference_index_; }
  double base_mva() const { return base_mva_; }

  /// Rows of H that are injection measurements, in measurement order.
  std::vector<std::size_t> injection_rows() const;

  /// P·[WBᵀ; −WBᵀ; B₀WBᵀ] for the given line weights and this model's
  /// topology and measurement placement.
  Matrix assemble(const Vector& line_weights) const;

  friend GridModel build_model(const GridCase& grid_case);

 private:
  GridModel() = default;

  double base_mva_ = 100.0;
  std::size_t reference_index_ = 0;
  Matrix B0_;
  Matrix B_;
  Vector weights_;
  Matrix P_;
  Matrix H_;
  Vector sigma_;
  std::vector<MeasurementLabel> labels_;
};

/// Builds and checks observability (rank H = n); throws UnobservableError.
GridModel build_model(const GridCase& grid_case);

/// Rank from column-pivoted QR, pivots below 1e-8·max pivot count as zero.
std::size_t numerical_rank(const Matrix& A);

/// (I − diag(d))·H.
Matrix mask_rows(const Matrix& H, const AvailabilityMask& d);

bool is_observable(const Matrix& H, const AvailabilityMask& d);

struct MeasurementSnapshot {
  Vector z;
  Vector x_true;
  std::uint64_t noise_seed = 0;
};

/// z = Hx + e with e_i ~ N(0, σ_i²); a zero σ_i yields an exact row.
MeasurementSnapshot synthesize_measurements(const Matrix& H, const Vector& sigma,
                                            const Vector& x_true, std::uint64_t seed);
MeasurementSnapshot synthesize_measurements(const GridModel& model, const Vector& x_true,
                                            std::uint64_t seed);

}  // namespace gridrisk
