#include "condcov/export.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "condcov/csv.hpp"
#include "condcov/error.hpp"
#include "condcov/format.hpp"
#include "condcov/version.hpp"

namespace condcov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_double_or_throw(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw Error(Errc::unparseable_cell, "cannot parse " + what + " from '" + text + "'");
  }
  return value;
}

// Metadata lines are "# key: value"; returns the map and the remaining rows.
std::map<std::string, std::string> split_meta(const std::string& text, std::string& body) {
  std::map<std::string, std::string> meta;
  std::istringstream in(text);
  std::string line;
  std::ostringstream rest;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') {
      const std::size_t colon = line.find(':');
      if (colon != std::string::npos) {
        std::string key = line.substr(1, colon - 1);
        std::string value = line.substr(colon + 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        meta[key] = value;
      }
      continue;
    }
    rest << line << "\n";
  }
  body = rest.str();
  return meta;
}

const std::string& require_meta(const std::map<std::string, std::string>& meta,
                                const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) {
    throw Error(Errc::unparseable_cell, "export is missing the '" + key + "' metadata line");
  }
  return it->second;
}

nlohmann::json grid_to_json(const EvaluationGrid& grid) {
  nlohmann::json points = nlohmann::json::array();
  for (Eigen::Index g = 0; g < grid.size(); ++g) points.push_back(grid.points(g));
  return points;
}

EvaluationGrid grid_from_json(const nlohmann::json& points) {
  EvaluationGrid grid;
  grid.points.resize(static_cast<Eigen::Index>(points.size()));
  for (std::size_t g = 0; g < points.size(); ++g) {
    grid.points(static_cast<Eigen::Index>(g)) = points[g].get<double>();
  }
  validate_grid(grid);
  return grid;
}

}  // namespace

const char* to_string(ExportFormat format) {
  return format == ExportFormat::delimited ? "delimited" : "structured";
}

ExportFormat export_format_from_string(const std::string& name) {
  if (name == "delimited" || name == "csv") return ExportFormat::delimited;
  if (name == "structured" || name == "json") return ExportFormat::structured;
  throw Error(Errc::invalid_argument, "unknown export format '" + name + "'");
}

std::string to_delimited(const CovarianceField& field) {
  validate_field(field);
  std::ostringstream out;
  out << "# condcov field\n";
  out << "# version: " << kVersion << "\n";
  out << "# kind: " << to_string(field.kind) << "\n";
  out << "# bandwidth: " << format_double_17g(field.bandwidth) << "\n";
  out << "# channels: " << field.channels() << "\n";
  out << "z,k,l,estimate,sd,lower,upper\n";
  const Eigen::Index p = field.channels();
  for (Eigen::Index g = 0; g < field.size(); ++g) {
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = k; l < p; ++l) {
        out << format_double_17g(field.grid.points(g)) << ',' << (k + 1) << ',' << (l + 1) << ','
            << format_double_17g(field.matrices[static_cast<std::size_t>(g)](k, l)) << ",,,\n";
      }
    }
  }
  return out.str();
}

CovarianceField field_from_delimited(const std::string& text) {
  std::string body;
  const auto meta = split_meta(text, body);
  const auto rows = csv::parse(body);
  if (rows.empty() || rows.front().size() != 7) {
    throw Error(Errc::unparseable_cell, "field export has no valid header row");
  }

  CovarianceField field;
  field.kind = field_kind_from_string(require_meta(meta, "kind"));
  field.bandwidth = parse_double_or_throw(require_meta(meta, "bandwidth"), "bandwidth");
  const Eigen::Index p =
      static_cast<Eigen::Index>(parse_double_or_throw(require_meta(meta, "channels"), "channels"));

  std::vector<double> grid_points;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double z = parse_double_or_throw(rows[r][0], "grid value");
    if (grid_points.empty() || grid_points.back() != z) grid_points.push_back(z);
  }
  field.grid.points = Eigen::Map<const Eigen::VectorXd>(grid_points.data(),
                                                        static_cast<Eigen::Index>(grid_points.size()));
  validate_grid(field.grid);
  field.matrices.assign(static_cast<std::size_t>(field.grid.size()),
                        Eigen::MatrixXd::Zero(p, p));

  std::size_t r = 1;
  for (Eigen::Index g = 0; g < field.grid.size(); ++g) {
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = k; l < p; ++l, ++r) {
        if (r >= rows.size()) {
          throw Error(Errc::unparseable_cell, "field export ends before all entries are present");
        }
        const double value = parse_double_or_throw(rows[r][3], "estimate");
        field.matrices[static_cast<std::size_t>(g)](k, l) = value;
        field.matrices[static_cast<std::size_t>(g)](l, k) = value;
      }
    }
  }
  return field;
}

std::string to_delimited(const BandCollection& bands) {
  std::ostringstream out;
  out << "# condcov bands\n";
  out << "# version: " << kVersion << "\n";
  out << "# statistic: " << to_string(bands.statistic) << "\n";
  out << "# bandwidth: " << format_double_17g(bands.meta.bandwidth) << "\n";
  out << "# replicates: " << bands.meta.replicates << "\n";
  out << "# failed_replicates: " << bands.meta.failed_replicates << "\n";
  out << "# alpha: " << format_double_17g(bands.meta.alpha) << "\n";
  out << "# seed: " << bands.meta.seed << "\n";
  out << "# mode: " << bands.meta.mode << "\n";
  out << "z,k,l,estimate,sd,lower,upper\n";
  for (Eigen::Index g = 0; g < bands.grid.size(); ++g) {
    for (const auto& entry : bands.entries) {
      out << format_double_17g(bands.grid.points(g)) << ',' << (entry.k + 1) << ','
          << (entry.l + 1) << ',';
      if (entry.band.valid[static_cast<std::size_t>(g)]) {
        out << format_double_17g(entry.band.estimate(g)) << ','
            << format_double_17g(entry.band.boot_sd(g)) << ','
            << format_double_17g(entry.band.lower(g)) << ','
            << format_double_17g(entry.band.upper(g)) << "\n";
      } else {
        out << ",,,\n";
      }
    }
  }
  return out.str();
}

BandCollection band_from_delimited(const std::string& text) {
  std::string body;
  const auto meta = split_meta(text, body);
  const auto rows = csv::parse(body);
  if (rows.empty() || rows.front().size() != 7) {
    throw Error(Errc::unparseable_cell, "band export has no valid header row");
  }

  BandCollection bands;
  bands.statistic = field_kind_from_string(require_meta(meta, "statistic"));
  bands.meta.bandwidth = parse_double_or_throw(require_meta(meta, "bandwidth"), "bandwidth");
  bands.meta.replicates =
      static_cast<int>(parse_double_or_throw(require_meta(meta, "replicates"), "replicates"));
  bands.meta.failed_replicates = static_cast<int>(
      parse_double_or_throw(require_meta(meta, "failed_replicates"), "failed_replicates"));
  bands.meta.alpha = parse_double_or_throw(require_meta(meta, "alpha"), "alpha");
  bands.meta.seed = static_cast<std::uint64_t>(
      std::stoull(require_meta(meta, "seed")));
  bands.meta.mode = require_meta(meta, "mode");
  bands.meta.software_version = require_meta(meta, "version");

  std::vector<double> grid_points;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double z = parse_double_or_throw(rows[r][0], "grid value");
    if (grid_points.empty() || grid_points.back() != z) grid_points.push_back(z);
    if (grid_points.size() == 1) {
      pairs.emplace_back(static_cast<Eigen::Index>(parse_double_or_throw(rows[r][1], "k")) - 1,
                         static_cast<Eigen::Index>(parse_double_or_throw(rows[r][2], "l")) - 1);
    }
  }
  bands.grid.points = Eigen::Map<const Eigen::VectorXd>(grid_points.data(),
                                                        static_cast<Eigen::Index>(grid_points.size()));
  validate_grid(bands.grid);
  const Eigen::Index G = bands.grid.size();

  bands.entries.resize(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    auto& entry = bands.entries[e];
    entry.k = pairs[e].first;
    entry.l = pairs[e].second;
    entry.band.grid = bands.grid;
    entry.band.estimate = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.boot_sd = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.lower = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.upper = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.valid.assign(static_cast<std::size_t>(G), false);
    entry.band.alpha = bands.meta.alpha;
    entry.band.replicates = bands.meta.replicates;
  }

  std::size_t r = 1;
  for (Eigen::Index g = 0; g < G; ++g) {
    for (std::size_t e = 0; e < pairs.size(); ++e, ++r) {
      if (r >= rows.size()) {
        throw Error(Errc::unparseable_cell, "band export ends before all entries are present");
      }
      const csv::Row& row = rows[r];
      if (row.size() != 7) {
        throw Error(Errc::unparseable_cell, "band export row " + std::to_string(r) +
                                                " has " + std::to_string(row.size()) + " fields");
      }
      if (row[3].empty()) continue;  // gap row
      auto& band = bands.entries[e].band;
      band.estimate(g) = parse_double_or_throw(row[3], "estimate");
      band.boot_sd(g) = parse_double_or_throw(row[4], "sd");
      band.lower(g) = parse_double_or_throw(row[5], "lower");
      band.upper(g) = parse_double_or_throw(row[6], "upper");
      band.valid[static_cast<std::size_t>(g)] = true;
    }
  }
  return bands;
}

std::string to_structured(const CovarianceField& field) {
  validate_field(field);
  nlohmann::json doc;
  doc["type"] = "field";
  doc["version"] = kVersion;
  doc["kind"] = to_string(field.kind);
  doc["bandwidth"] = field.bandwidth;
  doc["channels"] = field.channels();
  doc["grid"] = grid_to_json(field.grid);
  nlohmann::json matrices = nlohmann::json::array();
  const Eigen::Index p = field.channels();
  for (Eigen::Index g = 0; g < field.size(); ++g) {
    nlohmann::json upper = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = k; l < p; ++l) {
        upper.push_back(field.matrices[static_cast<std::size_t>(g)](k, l));
      }
    }
    matrices.push_back(std::move(upper));
  }
  doc["matrices"] = std::move(matrices);
  return doc.dump(2) + "\n";
}

CovarianceField field_from_structured(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  CovarianceField field;
  field.kind = field_kind_from_string(doc.at("kind").get<std::string>());
  field.bandwidth = doc.at("bandwidth").get<double>();
  field.grid = grid_from_json(doc.at("grid"));
  const Eigen::Index p = doc.at("channels").get<Eigen::Index>();
  const auto& matrices = doc.at("matrices");
  if (static_cast<Eigen::Index>(matrices.size()) != field.grid.size()) {
    throw Error(Errc::unparseable_cell, "matrix count does not match the grid");
  }
  field.matrices.resize(matrices.size());
  for (std::size_t g = 0; g < matrices.size(); ++g) {
    Eigen::MatrixXd m(p, p);
    std::size_t idx = 0;
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = k; l < p; ++l, ++idx) {
        const double value = matrices[g].at(idx).get<double>();
        m(k, l) = value;
        m(l, k) = value;
      }
    }
    field.matrices[g] = std::move(m);
  }
  return field;
}

std::string to_structured(const BandCollection& bands) {
  nlohmann::json doc;
  doc["type"] = "bands";
  doc["version"] = kVersion;
  doc["statistic"] = to_string(bands.statistic);
  doc["grid"] = grid_to_json(bands.grid);
  doc["metadata"] = {{"bandwidth", bands.meta.bandwidth},
                     {"replicates", bands.meta.replicates},
                     {"failed_replicates", bands.meta.failed_replicates},
                     {"alpha", bands.meta.alpha},
                     {"seed", bands.meta.seed},
                     {"mode", bands.meta.mode},
                     {"software_version", bands.meta.software_version}};
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& entry : bands.entries) {
    nlohmann::json e;
    e["k"] = entry.k + 1;
    e["l"] = entry.l + 1;
    const auto dump_vec = [&entry](const Eigen::VectorXd& v) {
      nlohmann::json arr = nlohmann::json::array();
      for (Eigen::Index g = 0; g < v.size(); ++g) {
        if (entry.band.valid[static_cast<std::size_t>(g)]) {
          arr.push_back(v(g));
        } else {
          arr.push_back(nullptr);  // gap
        }
      }
      return arr;
    };
    e["estimate"] = dump_vec(entry.band.estimate);
    e["sd"] = dump_vec(entry.band.boot_sd);
    e["lower"] = dump_vec(entry.band.lower);
    e["upper"] = dump_vec(entry.band.upper);
    entries.push_back(std::move(e));
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

BandCollection band_from_structured(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  BandCollection bands;
  bands.statistic = field_kind_from_string(doc.at("statistic").get<std::string>());
  bands.grid = grid_from_json(doc.at("grid"));
  const auto& meta = doc.at("metadata");
  bands.meta.bandwidth = meta.at("bandwidth").get<double>();
  bands.meta.replicates = meta.at("replicates").get<int>();
  bands.meta.failed_replicates = meta.at("failed_replicates").get<int>();
  bands.meta.alpha = meta.at("alpha").get<double>();
  bands.meta.seed = meta.at("seed").get<std::uint64_t>();
  bands.meta.mode = meta.at("mode").get<std::string>();
  bands.meta.software_version = meta.at("software_version").get<std::string>();

  const Eigen::Index G = bands.grid.size();
  for (const auto& e : doc.at("entries")) {
    BandCollection::Entry entry;
    entry.k = e.at("k").get<Eigen::Index>() - 1;
    entry.l = e.at("l").get<Eigen::Index>() - 1;
    entry.band.grid = bands.grid;
    entry.band.estimate = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.boot_sd = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.lower = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.upper = Eigen::VectorXd::Constant(G, kNaN);
    entry.band.valid.assign(static_cast<std::size_t>(G), false);
    entry.band.alpha = bands.meta.alpha;
    entry.band.replicates = bands.meta.replicates;
    const auto& est = e.at("estimate");
    const auto& sd = e.at("sd");
    const auto& lower = e.at("lower");
    const auto& upper = e.at("upper");
    for (Eigen::Index g = 0; g < G; ++g) {
      const auto& cell = est.at(static_cast<std::size_t>(g));
      if (cell.is_null()) continue;
      entry.band.estimate(g) = cell.get<double>();
      entry.band.boot_sd(g) = sd.at(static_cast<std::size_t>(g)).get<double>();
      entry.band.lower(g) = lower.at(static_cast<std::size_t>(g)).get<double>();
      entry.band.upper(g) = upper.at(static_cast<std::size_t>(g)).get<double>();
      entry.band.valid[static_cast<std::size_t>(g)] = true;
    }
    bands.entries.push_back(std::move(entry));
  }
  return bands;
}

void export_field(const CovarianceField& field, const std::string& path, ExportFormat format) {
  csv::write_file(path, format == ExportFormat::delimited ? to_delimited(field)
                                                          : to_structured(field));
}

CovarianceField import_field(const std::string& path, ExportFormat format) {
  const std::string text = csv::read_file(path);
  return format == ExportFormat::delimited ? field_from_delimited(text)
                                           : field_from_structured(text);
}

void export_band(const BandCollection& bands, const std::string& path, ExportFormat format) {
  csv::write_file(path, format == ExportFormat::delimited ? to_delimited(bands)
                                                          : to_structured(bands));
}

BandCollection import_band(const std::string& path, ExportFormat format) {
  const std::string text = csv::read_file(path);
  return format == ExportFormat::delimited ? band_from_delimited(text)
                                           : band_from_structured(text);
}

}  // namespace condcov
