#include "masterheat/cli/plot_data.hpp"

#include <cmath>
#include <limits>

namespace masterheat::cli {

namespace {

double number_or_nan(const json& v) {
  return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> column(const json& values) {
  std::vector<double> out;
  for (const json& v : values) out.push_back(number_or_nan(v));
  return out;
}

}  // namespace

std::vector<CsvBundle> emit_plot_data(const json& report) {
  std::vector<CsvBundle> out;
  const std::string command = report.value("command", "");
  if (!report.contains("result")) return out;
  const json& r = report["result"];
  if (command == "blowup") {
    const json& s = r["series"];
    out.push_back({"blowup_series.csv",
                   {"t[time]", "J[norm^2*time]", "J_prime[norm^2]", "J_second[norm^2/time]", "margin[1]"},
                   {column(s["t"]), column(s["J"]), column(s["Jp"]), column(s["Jpp"]), column(s["margin"])}});
  } else if (command == "rescale") {
    CsvBundle b{"rescaling.csv", {"log_R[log length]", "log_abs_LHS[log]", "log_abs_RHS[log]"}, {{}, {}, {}}};
    for (const json& p : r["points"]) {
      b.columns[0].push_back(std::log(number_or_nan(p["R"])));
      b.columns[1].push_back(std::log(std::abs(number_or_nan(p["lhs"]))));
      b.columns[2].push_back(std::log(std::abs(number_or_nan(p["rhs"]))));
    }
    out.push_back(std::move(b));
  } else if (command == "verify-monotone") {
    CsvBundle margins{"monotone_margins.csv", {"lambda[length]", "min_margin[u]", "violations[count]"}, {{}, {}, {}}};
    for (const json& p : r["per_lambda"]) {
      margins.columns[0].push_back(p["lambda"].get<double>());
      margins.columns[1].push_back(number_or_nan(p["min_margin"]));
      margins.columns[2].push_back(p["violations"].get<double>());
    }
    out.push_back(std::move(margins));
    CsvBundle profiles{"w_lambda_profiles.csv", {"x1[length]"}, {column(r["profiles"]["x1"])}};
    for (const json& w : r["profiles"]["w"]) {
      profiles.header.push_back("w_lambda=" + format_number(w["lambda"].get<double>()) + "[u]");
      profiles.columns.push_back(column(w["values"]));
    }
    out.push_back(std::move(profiles));
  } else if (command == "solve") {
    const json& s = r["series"];
    out.push_back({"norms.csv", {"t[time]", "l2_norm[u*length^(n/2)]", "running_max[u*length^(n/2)]"}, {column(s["t"]), column(s["norm"]), column(s["running_max"])}});
  }
  return out;
}

void write_plot_data(const std::vector<CsvBundle>& bundles, const std::filesystem::path& dir) {
  for (const CsvBundle& b : bundles) write_csv(dir / b.name, b.header, b.columns);
}

}  // namespace masterheat::cli
