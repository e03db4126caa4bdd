#include <cmath>
#include <string>

#include "chaoscale/romberg.hpp"
#include "chaoscale_cli/runner.hpp"
#include "json.hpp"

namespace chaoscale::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw InvalidArgument("summary " + where + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where, "missing '" + key + "'");
  return obj.at(key);
}

double number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

double number_or_nan(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (v.is_null()) return NAN;
  if (!v.is_number()) fail(where + "." + key, "expected a number or null");
  return v.get<double>();
}

std::uint64_t integer(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number_unsigned()) fail(where + "." + key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

const json& array(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_array()) fail(where + "." + key, "expected an array");
  return v;
}

void check_grid(const json& grid) {
  const std::string where = "grid";
  if (!field(grid, "source", where).is_string()) fail(where + ".source", "expected a string");
  const auto source = grid.at("source").get<std::string>();
  if (source != "static-enumeration" && source != "static-mc" && source != "dynamic-mc") {
    fail(where + ".source", "unknown source '" + source + "'");
  }
  number(grid, "reference", where);
  std::uint64_t prev = 0;
  for (const auto& p : array(grid, "points", where)) {
    const auto n = integer(p, "N", where + ".points");
    if (n <= prev) fail(where + ".points", "N must be strictly increasing");
    prev = n;
    number(p, "bias", where + ".points");
    const double se = number(p, "stderr", where + ".points");
    if (!(se >= 0.0)) fail(where + ".points", "stderr must be >= 0");
    if (source == "static-enumeration" && se != 0.0) {
      fail(where + ".points", "enumeration entries must have stderr 0");
    }
    integer(p, "reps", where + ".points");
  }
  const auto& guard = field(grid, "dt_guard", where);
  for (const char* key : {"checked", "passed"}) {
    if (!field(guard, key, where + ".dt_guard").is_boolean()) {
      fail(where + ".dt_guard." + key, "expected a boolean");
    }
  }
}

void check_weights(const json& w, std::size_t k, const std::string& where) {
  if (!w.is_array() || w.size() != k) fail(where, "expected k weights");
  double sum = 0;
  for (const auto& a : w) {
    if (!a.is_number()) fail(where, "weights must be numbers");
    sum += a.get<double>();
  }
  if (std::abs(sum - 1.0) > 1e-12) fail(where, "weights must sum to 1");
}

}  // namespace

void validate_summary(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("document", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("document", "expected an object");
  const auto& schema_node = field(j, "schema", "document");
  if (!schema_node.is_string()) fail("schema", "expected a string");
  const auto schema = schema_node.get<std::string>();
  if (!field(j, "experiment", "document").is_string()) fail("experiment", "expected a string");
  integer(j, "seed", "document");

  if (schema == "chaoscale.grid.v1") {
    check_grid(field(j, "grid", "document"));
  } else if (schema == "chaoscale.fit.v1") {
    const auto& grid = field(j, "grid", "document");
    check_grid(grid);
    const auto& fit = field(j, "fit", "document");
    const auto k = integer(fit, "k", "fit");
    if (k < 2) fail("fit.k", "must be >= 2");
    const auto& coef = array(fit, "coefficients", "fit");
    const auto& se = array(fit, "standard_errors", "fit");
    if (coef.size() != k - 1 || se.size() != k - 1) fail("fit", "expected k-1 coefficients");
    if (grid.at("points").size() < k + 1) fail("fit", "fewer grid points than k+1");
    if (!(number(fit, "residual_norm", "fit") >= 0.0)) fail("fit.residual_norm", "must be >= 0");
    number_or_nan(fit, "slope", "fit");
  } else if (schema == "chaoscale.constants.v1") {
    for (const auto& c : array(j, "constants", "document")) {
      const auto p = integer(c, "p", "constants");
      if (p < 1) fail("constants.p", "must be >= 1");
      number(c, "value", "constants");
      if (!(number(c, "stderr", "constants") >= 0.0)) fail("constants.stderr", "must be >= 0");
      integer(c, "samples", "constants");
    }
  } else if (schema == "chaoscale.romberg.v1") {
    const auto k = integer(j, "k", "document");
    check_weights(field(j, "weights", "document"), k, "weights");
    number_or_nan(j, "reference", "document");
    std::uint64_t prev = 0;
    for (const auto& r : array(j, "rows", "document")) {
      const auto n = integer(r, "N", "rows");
      if (n <= prev) fail("rows", "N must be strictly increasing");
      prev = n;
      number(r, "value", "rows");
      if (!(number(r, "stderr", "rows") >= 0.0)) fail("rows.stderr", "must be >= 0");
      if (array(r, "level_means", "rows").size() != k) fail("rows.level_means", "expected k entries");
    }
  } else if (schema == "chaoscale.ensemble.v1") {
    integer(j, "n", "document");
    integer(j, "k", "document");
    number(j, "reference", "document");
    for (const auto& r : array(j, "rows", "document")) {
      integer(r, "M", "rows");
      for (const char* key : {"variance_estimate", "bias_squared", "variance", "mse"}) {
        if (!(number(r, key, "rows") >= 0.0)) fail(std::string("rows.") + key, "must be >= 0");
      }
    }
  } else if (schema == "chaoscale.cost_plan.v1") {
    const double eps = number(j, "epsilon", "document");
    if (!(eps > 0.0 && eps < 1.0)) fail("epsilon", "must lie in (0, 1)");
    const auto k = integer(j, "k", "document");
    const auto n = integer(j, "N", "document");
    const auto m = integer(j, "M", "document");
    if (k < 1 || n < 1 || m < 1) fail("document", "counts must be positive");
    if (integer(j, "C", "document") != interaction_count(n, m, static_cast<unsigned>(k))) {
      fail("C", "does not equal M * sum (mN)^2");
    }
    const auto ns = integer(j, "N_single", "document");
    if (integer(j, "C_single", "document") != ns * ns) fail("C_single", "must equal N_single^2");
  } else if (schema == "chaoscale.weights.v1") {
    check_weights(field(j, "weights", "document"), integer(j, "k", "document"), "weights");
  } else {
    fail("schema", "unknown schema '" + schema + "'");
  }
}

}  // namespace chaoscale::cli
