#pragma once

#include <string>
#include <vector>

#include "rsb/catalog.hpp"
#include "rsb/params.hpp"

namespace rsb {

/// Outward-rounded enclosure of the bound value. `upper` is a rigorous
/// upper bound on the asymptotic independence ratio for the given degree.
struct CertifiedValue {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
};

struct VerifyOptions {
  int precision_digits = 36;   // working precision of the interval arithmetic
  double width_limit = 1e-6;   // wider results raise a precision error
  int jobs = 1;                // concurrent catalog entries
};

/// Evaluates the bound with directed-rounding interval arithmetic. The
/// sibling probabilities are renormalized as intervals, so the enclosure is
/// valid for an exact point of the probability simplex.
CertifiedValue certify_bound(const ParamShape& shape, const RsbParams& params,
                             const VerifyOptions& opts = {});

enum class VerifyStatus { Pass, Fail, Skipped };

struct VerifyResult {
  CatalogEntry entry;
  VerifyStatus status = VerifyStatus::Skipped;
  double certified_upper = 0.0;
  double certified_width = 0.0;
  std::string message;
};

struct VerifyReport {
  std::vector<VerifyResult> results;
  int passed = 0;
  int failed = 0;
  int skipped = 0;

  bool all_ok() const { return failed == 0; }
};

/// Certifies each entry whose parameter file exists under `params_dir`.
/// PASS means certified upper <= published + one unit of the printed
/// decimal. Missing files are SKIPPED. Results sorted by degree, method.
VerifyReport verify_catalog(const std::vector<CatalogEntry>& entries,
                            const std::string& params_dir, const VerifyOptions& opts = {});

/// Checks that published bounds weakly decrease along
/// RS >= 1 >= 1+ >= 2 >= 3 >= 4 >= 5 within each degree.
std::vector<std::string> cross_check_hierarchy(const std::vector<CatalogEntry>& entries);

std::string render_report(const VerifyReport& report);
std::string report_json(const VerifyReport& report);

}  // namespace rsb
