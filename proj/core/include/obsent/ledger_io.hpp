#pragma once

// CSV and JSON artifacts. Column names come from frozen registries; the
// plotting scripts and the acceptance suite parse them by name.

#include <ostream>
#include <string>
#include <vector>

#include "obsent/fluct.hpp"
#include "obsent/lawsuite.hpp"

namespace obsent {

/// 17 significant digits in scientific form, with a dot as decimal separator.
std::string format_double(double v);

const std::vector<std::string>& isolated_columns();
/// Shared columns followed by per-bath blocks suffixed _1, _2, ...
std::vector<std::string> open_columns(std::size_t baths, bool particles);
const std::vector<std::string>& ft_columns();

void write_ledger_csv(std::ostream& os, const ThermoLedger& ledger);
void write_ft_csv(std::ostream& os, const DetailedFt& ft);

/// Summary JSON text (pretty-printed, key order fixed).
std::string ledger_summary_json(const ThermoLedger& ledger, const std::vector<Violation>& violations);
std::string fluctuation_summary_json(const FluctuationResult& result);

}  // namespace obsent
