#pragma once

#include "cislunar/solver.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cislunar {

enum class CaseId { GATEWAY_TO_LLO, LLO_TO_GATEWAY, GATEWAY_TO_LEO, LEO_TO_GATEWAY, PROPAGATE_ONLY,
                    VALIDATE, CUSTOM };
std::string_view to_string(CaseId c);
CaseId case_from_string(std::string_view s);

enum class RunMode { SOLVE, PROPAGATE, VALIDATE };
RunMode mode_from_string(std::string_view s);

// A fixed (non-Gateway) departure orbit, km and degrees in the file.
struct FixedDeparture {
  BodyId center = BodyId::MOON;
  ClassicalElements elements;  // km, rad
};

// A single propagation of a given unknown vector.
struct PropagateRequest {
  std::string epoch_utc;
  double tof_days = 1.0;
  Costate lambda = Costate::Zero();
  bool thrust = true;
};

struct ScenarioConfig {
  CaseId case_id = CaseId::GATEWAY_TO_LLO;
  TerminalTarget target;
  double u_max_kms2 = 4.903e-7;
  double c_kms = 30.0;
  std::string window_begin_utc = "2025-05-23T22:35:00Z";
  std::string window_end_utc = "2025-05-30T05:38:00Z";
  double tof_lo_days = 25.0;
  double tof_hi_days = 45.0;
  SolverSettings settings;
  DeConfig de;
  std::string gateway_csv;  // resolved path
  double rho_e_km = kDefaultTransitionRadiusKm;
  bool perturbations = true;
  std::string output_dir = "out";

  // Only for the custom case.
  Direction direction = Direction::FORWARD;
  bool multi_arc = false;
  std::optional<FixedDeparture> departure;

  std::optional<PropagateRequest> propagate;
};

// JSON document to a validated config. Unknown keys and schema violations
// raise InvalidInput naming the key. Relative paths resolve against
// base_dir.
ScenarioConfig parse_config(std::string_view document, const std::string& base_dir = "");
ScenarioConfig load_config(const std::string& path);

// Default Gateway table shipped with the repository.
std::string default_gateway_csv();

TransferScenario build_scenario(const ScenarioConfig& cfg);

// Per-figure data files.
extern const char* const kElementsHeader;
extern const char* const kAnglesHeader;
extern const char* const kSynodicHeader;
void write_elements_csv(std::ostream& out, const Trajectory& traj);
void write_angles_csv(std::ostream& out, const Trajectory& traj);
void write_synodic_csv(std::ostream& out, const Trajectory& traj, const EphemerisProvider& ephem);

// Numeric CSV with a fixed header, read back for verification.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv_table(std::istream& in, std::string_view expected_header);

struct ValidationCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};
std::vector<ValidationCheck> run_validation(const std::shared_ptr<const EphemerisProvider>& ephem);

struct RunOptions {
  RunMode mode = RunMode::SOLVE;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

// Returns the process exit status: 0 success, 2 not converged or a failed
// check, 1 on configuration or I/O errors.
int run(const ScenarioConfig& cfg, const RunOptions& options, std::ostream& log);

}  // namespace cislunar
