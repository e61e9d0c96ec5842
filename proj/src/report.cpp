#include "levy/report.hpp"

#include <cmath>
#include <iomanip>
#include <locale>
#include <sstream>

namespace levy {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

std::string format_optional(const std::optional<double>& x) {
  return x ? format_double(*x) : std::string();
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

Json to_json(const std::optional<double>& x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}

Json finite_or_null(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

std::string tool_version() { return LEVY_ESCAPE_VERSION; }

}  // namespace levy
