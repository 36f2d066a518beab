// Writes the bundled Gateway surrogate table: the anchor osculating state
// propagated ballistically in the perturbed lunar model.

#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"
#include "cislunar/surrogate.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Generate the Gateway surrogate state table"};
  std::string out = "data/gateway_surrogate.csv";
  std::string begin = "2025-05-21T00:00:00Z";
  std::string end = "2025-06-02T00:00:00Z";
  double spacing = 600.0;
  app.add_option("--out", out, "output CSV path");
  app.add_option("--begin", begin, "first epoch (UTC)");
  app.add_option("--end", end, "last epoch (UTC)");
  app.add_option("--spacing", spacing, "node spacing in seconds")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    using namespace cislunar;
    const auto table =
        generate_gateway_surrogate(default_gateway_anchor(), utc_to_tdb(begin), utc_to_tdb(end),
                                   spacing, make_default_ephemeris());
    std::ofstream f(out);
    if (!f) {
      std::cerr << "cannot write " << out << "\n";
      return 1;
    }
    f << format_state_table(table);
    std::cout << "wrote " << table.size() << " nodes to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
