#pragma once

// JSON and CSV serialization of forms, loops, reports and certificates.
// CSV files carry a header row and print reals with 17 significant digits.

#include "cylgeo/solver.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace cylgeo {

using Json = nlohmann::ordered_json;

/// "%.17g"
std::string format_real(double value);

Json profile_to_json(const Profile& profile);
/// Throws ConfigError (with the offending field path) on malformed input.
Profile profile_from_json(const Json& j, const std::string& path = "profile");

/// {"n": N, "terms": [{"profile": {...}, "block": [[...]]}], "claims": {...}}
Json form_to_json(const PerturbationForm& form);

/// Accepts either explicit terms or a builtin shortcut:
///   {"terms": [...]}                                     (n from the block size or `n`)
///   {"builtin": "isotropic", "profile": {...}}
///   {"builtin": "diagonal", "profile": {...}, "sphere_diag": [...], "radial": 0}
///   {"builtin": "odd_decay_anisotropic"}
///   {"builtin": "zero"}
/// `n` is required for builtins unless passed explicitly.
PerturbationForm form_from_json(const Json& j, int n = -1, const std::string& path = "perturbation");

Json loop_to_json(const DiscreteLoop& loop);
DiscreteLoop loop_from_json(const Json& j);
/// Columns k, t, r, x0..xN.
void write_loop_csv(std::ostream& os, const DiscreteLoop& loop);

Json circle_param_to_json(const CircleParam& param);
CircleParam circle_param_from_json(const Json& j);

Json spectrum_to_json(const SpectrumSummary& s, bool with_eigenvalues = false);
/// Columns index, eigenvalue.
void write_spectrum_csv(std::ostream& os, const SpectrumSummary& s);

Json certificate_to_json(const GeodesicCertificate& cert);
Json orbits_to_json(const std::vector<OrbitClass>& orbits);
Json reduction_report_to_json(const ReductionReport& report);
Json cylinder_report_to_json(const CylinderDegreeReport& report);
Json experiment_report_to_json(const ExperimentReport& report);

/// Columns r, gamma_min, gamma_max.
void write_gamma_csv(std::ostream& os, const std::vector<GammaSlice>& slices);

}  // namespace cylgeo
