#pragma once

#include <string>

#include "condcov/band.hpp"
#include "condcov/field.hpp"

namespace condcov {

enum class ExportFormat { delimited, structured };

const char* to_string(ExportFormat format);
ExportFormat export_format_from_string(const std::string& name);

/// Delimited layout, shared by fields and bands: '#'-prefixed metadata
/// lines, a header row, then one row per (z_g, k, l) with k <= l and
/// 1-based channel indices, columns z,k,l,estimate,sd,lower,upper. Field
/// exports leave sd/lower/upper empty; band gap points leave all four value
/// cells empty. Values are written with 17 significant digits and
/// round-trip exactly.
std::string to_delimited(const CovarianceField& field);
std::string to_delimited(const BandCollection& bands);
CovarianceField field_from_delimited(const std::string& text);
BandCollection band_from_delimited(const std::string& text);

/// Structured layout: a single JSON document with the grid, the
/// upper-triangle matrix payloads (fields) or per-entry band arrays with
/// nulls at gaps (bands), and a metadata block.
std::string to_structured(const CovarianceField& field);
std::string to_structured(const BandCollection& bands);
CovarianceField field_from_structured(const std::string& text);
BandCollection band_from_structured(const std::string& text);

void export_field(const CovarianceField& field, const std::string& path, ExportFormat format);
CovarianceField import_field(const std::string& path, ExportFormat format);
void export_band(const BandCollection& bands, const std::string& path, ExportFormat format);
BandCollection import_band(const std::string& path, ExportFormat format);

}  // namespace condcov
