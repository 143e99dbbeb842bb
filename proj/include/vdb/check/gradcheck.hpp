#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vdb/nn/tensor.hpp"

namespace vdb {

struct GradCheckConfig {
  int configs = 100;  ///< random configurations per component
  double rtol = 1e-4;
  double atol = 1e-7;
  double step = 1e-5;  ///< central-difference step
  std::uint64_t seed = 0;

  void validate() const;
};

/// Outcome for one component across all of its random configurations.
struct GradCheckCase {
  std::string name;
  int configs = 0;
  long entries = 0;     ///< gradient entries compared
  long mismatches = 0;  ///< entries outside rtol/atol
  double max_rel_error = 0.0;
  std::string first_failure;

  bool passed() const { return mismatches == 0 && configs > 0; }
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;

  bool passed() const;
};

/// Central differences of `loss` with respect to every parameter entry.
std::vector<Matrix> central_differences(const ParamList& params, const std::function<double()>& loss, double step);
/// Central differences with respect to the entries of `x`.
Matrix central_differences(Matrix& x, const std::function<double()>& loss, double step);

/// Compares analytic gradients to central differences for every layer type
/// (linear, MLP, phase-blended linear, encoder) and every composite loss
/// (VDB discriminator loss, generator loss, gradient penalty, PPO surrogate,
/// VAIRL f, VAIRL loss, VAIRL gradient penalty).
GradCheckReport run_gradchecks(const GradCheckConfig& cfg);

/// name,configs,entries,mismatches,max_rel_error,passed
void write_gradcheck_csv(const GradCheckReport& report, std::ostream& os);

}  // namespace vdb
