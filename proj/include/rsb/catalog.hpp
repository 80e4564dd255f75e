#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rsb {

/// One published bound. Decimal strings are transcribed verbatim; the
/// numeric value is derived on demand so the record of what was published
/// stays exact.
struct CatalogEntry {
  int degree = 0;
  std::string method;      // "RS", "McKay", "1", "1+", "2", "3", "4", "5"
  std::vector<int> shape;  // branching factors, empty when not applicable
  int div = 0;             // grid resolution for refined 1-RSB rows, else 0
  std::string published;   // decimal string as printed
  std::string params_file; // parameter file name, empty if none is shipped
};

/// Best bound per degree and method, degrees 3 through 19, plus the two
/// classical reference rows for degree 3.
const std::vector<CatalogEntry>& best_bounds_catalog();

/// Degree-3 study tables: two-level bounds by atom count, deeper trees by
/// shape, and grid-refined bounds by resolution.
const std::vector<CatalogEntry>& degree3_catalog();

/// FNV-1a over every published decimal in catalog order; guards against
/// silent transcription edits.
std::uint64_t catalog_checksum();

/// Numeric value of the published decimal (correctly rounded double).
double published_value(const CatalogEntry& e);

/// One unit in the last printed decimal place.
double published_ulp(const CatalogEntry& e);

}  // namespace rsb
