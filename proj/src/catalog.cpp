#include "rsb/catalog.hpp"

#include <cmath>
#include <cstdlib>

#include "rsb/optimize.hpp"

namespace rsb {

namespace {

std::string shape_suffix(const std::vector<int>& shape) {
  std::string s;
  for (int n : shape) s += "_" + std::to_string(n);
  return s;
}

std::string file_name(int degree, int r, const std::vector<int>& shape) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "d%02d_r%d", degree, r);
  return std::string(buf) + shape_suffix(shape) + ".json";
}

CatalogEntry rsb(int degree, int r, std::vector<int> shape, std::string published) {
  CatalogEntry e;
  e.degree = degree;
  e.method = std::to_string(r);
  e.params_file = file_name(degree, r, shape);
  e.shape = std::move(shape);
  e.published = std::move(published);
  return e;
}

CatalogEntry plus1(int degree, int div, std::string published) {
  CatalogEntry e;
  e.degree = degree;
  e.method = "1+";
  e.div = div;
  e.published = std::move(published);
  return e;
}

CatalogEntry reference(int degree, std::string method, std::string published) {
  CatalogEntry e;
  e.degree = degree;
  e.method = std::move(method);
  e.published = std::move(published);
  return e;
}

}  // namespace

const std::vector<CatalogEntry>& best_bounds_catalog() {
  static const std::vector<CatalogEntry> entries = {
      reference(3, "RS", "0.45906"),
      reference(3, "McKay", "0.45537"),
      rsb(3, 1, {}, "0.450859654"),
      rsb(3, 2, {32}, "0.450789936"),
      rsb(3, 3, {8, 4}, "0.450786018"),
      rsb(3, 4, {8, 2, 2}, "0.450785346"),
      rsb(3, 5, {4, 2, 2, 2}, "0.450785210"),
      rsb(4, 1, {}, "0.411194564"),
      rsb(4, 2, {18}, "0.411100755"),
      rsb(4, 3, {6, 4}, "0.411095101"),
      rsb(4, 4, {4, 3, 2}, "0.411094131"),
      rsb(5, 1, {}, "0.379268170"),
      rsb(5, 2, {8}, "0.379176250"),
      rsb(5, 3, {3, 3}, "0.379170372"),
      rsb(5, 4, {2, 2, 3}, "0.379170310"),
      rsb(6, 1, {}, "0.352984549"),
      rsb(6, 2, {7}, "0.352905514"),
      rsb(6, 3, {4, 2}, "0.352900232"),
      rsb(6, 4, {3, 2, 2}, "0.352899485"),
      rsb(7, 1, {}, "0.330884354"),
      rsb(7, 2, {5}, "0.330821477"),
      rsb(7, 3, {5, 2}, "0.330817014"),
      rsb(8, 1, {}, "0.311972567"),
      rsb(8, 2, {6}, "0.311925387"),
      rsb(8, 3, {3, 2}, "0.311922227"),
      rsb(9, 1, {}, "0.295553902"),
      rsb(9, 2, {5}, "0.295520273"),
      rsb(9, 3, {2, 2}, "0.295519497"),
      rsb(10, 1, {}, "0.281128003"),
      rsb(10, 2, {5}, "0.281105186"),
      rsb(10, 3, {2, 2}, "0.281104953"),
      rsb(11, 1, {}, "0.268324856"),
      rsb(11, 2, {7}, "0.268310124"),
      rsb(12, 1, {}, "0.256864221"),
      rsb(12, 2, {5}, "0.256855205"),
      rsb(13, 1, {}, "0.246529415"),
      rsb(13, 2, {6}, "0.246524236"),
      rsb(14, 1, {}, "0.237149865"),
      rsb(14, 2, {4}, "0.237147193"),
      rsb(15, 1, {}, "0.228589175"),
      rsb(15, 2, {4}, "0.228587914"),
      rsb(16, 1, {}, "0.220736776"),
      rsb(16, 2, {4}, "0.220736278"),
      rsb(17, 1, {}, "0.213501935208"),
      plus1(17, 1024, "0.213501905193"),
      rsb(18, 1, {}, "0.206809394782"),
      plus1(18, 1024, "0.206809390398"),
      rsb(18, 2, {2}, "0.206809390050"),
      rsb(19, 1, {}, "0.2005961242697"),
      plus1(19, 1024, "0.2005961242567"),
  };
  return entries;
}

const std::vector<CatalogEntry>& degree3_catalog() {
  static const std::vector<CatalogEntry> entries = {
      // two-level bounds by atom count
      rsb(3, 2, {2}, "0.45080997599102"),
      rsb(3, 2, {3}, "0.45079057802543"),
      rsb(3, 2, {4}, "0.45078995066987"),
      rsb(3, 2, {5}, "0.45078993616987"),
      rsb(3, 2, {6}, "0.45078993583363"),
      rsb(3, 2, {7}, "0.45078993582594"),
      rsb(3, 2, {11}, "0.45078993582525"),
      rsb(3, 2, {32}, "0.45078993582510"),
      // deeper trees by shape
      rsb(3, 3, {5, 4}, "0.45078601768"),
      rsb(3, 3, {8, 3}, "0.45078601734"),
      rsb(3, 3, {8, 4}, "0.45078601720"),
      rsb(3, 4, {6, 2, 2}, "0.45078537162"),
      rsb(3, 4, {5, 3, 2}, "0.45078534630"),
      rsb(3, 4, {8, 2, 2}, "0.45078534531"),
      rsb(3, 5, {4, 2, 2, 2}, "0.45078520944"),
      // grid-refined bounds by resolution
      plus1(3, 1, "0.45085965358"),
      plus1(3, 2, "0.45085113089"),
      plus1(3, 4, "0.45084699561"),
      plus1(3, 8, "0.45084570075"),
      plus1(3, 16, "0.45084535605"),
      plus1(3, 32, "0.45084526847"),
      plus1(3, 64, "0.45084524648"),
      plus1(3, 128, "0.45084524098"),
      plus1(3, 256, "0.45084523960"),
      plus1(3, 512, "0.45084523926"),
      plus1(3, 1024, "0.45084523917"),
  };
  return entries;
}

std::uint64_t catalog_checksum() {
  std::string all;
  for (const auto& e : best_bounds_catalog()) all += e.published + "\n";
  for (const auto& e : degree3_catalog()) all += e.published + "\n";
  return fnv1a(all.data(), all.size());
}

double published_value(const CatalogEntry& e) { return std::strtod(e.published.c_str(), nullptr); }

double published_ulp(const CatalogEntry& e) {
  const auto dot = e.published.find('.');
  if (dot == std::string::npos) return 1.0;
  const int places = static_cast<int>(e.published.size() - dot - 1);
  return std::pow(10.0, -places);
}

}  // namespace rsb
