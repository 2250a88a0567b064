#include "repsample/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace repsample {

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;

  const auto end_field = [&] {
    row.push_back(field);
    field.clear();
  };
  const auto end_row = [&] {
    end_field();
    if (table.header.empty())
      table.header = std::move(row);
    else
      table.rows.push_back(std::move(row));
    row = {};
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !field.empty() || !row.empty()) end_row();
        break;
      default:
        field.push_back(c);
        row_has_content = true;
        break;
    }
  }
  if (row_has_content || !field.empty() || !row.empty()) end_row();
  if (table.header.empty()) throw std::runtime_error("parse_csv: empty input");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv_file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

DatasetSchema schema_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  DatasetSchema s;
  for (const auto& f : j.at("features")) {
    FeatureColumn col;
    col.name = f.at("name").get<std::string>();
    const std::string kind = f.value("kind", "ordinal");
    if (kind == "ordinal")
      col.kind = ColumnKind::Ordinal;
    else if (kind == "categorical")
      col.kind = ColumnKind::Categorical;
    else if (kind == "binary")
      col.kind = ColumnKind::Binary;
    else
      throw std::runtime_error("schema: unknown feature kind " + kind);
    s.features.push_back(std::move(col));
  }
  for (const auto& a : j.at("sensitive")) s.sensitive.push_back(a.get<std::string>());
  s.target = j.at("target").get<std::string>();
  s.location = j.value("location", std::string{});
  s.min_site_size = j.value("min_site_size", 1000);
  return s;
}

DatasetSchema schema_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("schema_from_json_file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return schema_from_json(buf.str());
}

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "N/A" || cell == "?";
}

std::optional<double> parse_number(const std::string& cell) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && *(end - 1) == ' ') --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::size_t column_index(const CsvTable& table, const std::string& name) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return i;
  throw std::runtime_error("preprocess: missing column " + name);
}

// Maps the two distinct values of a binary column to {0,1}; values sort
// lexicographically, so the smaller one becomes 0.
std::map<std::string, double> binary_map(const std::set<std::string>& values,
                                         const std::string& column) {
  if (values.size() == 1) {
    return {{*values.begin(), 0.0}};
  }
  if (values.size() != 2)
    throw std::runtime_error("preprocess: column " + column +
                             " is not binary (" +
                             std::to_string(values.size()) + " values)");
  std::map<std::string, double> m;
  double code = 0.0;
  for (const auto& v : values) m[v] = code++;
  return m;
}

}  // namespace

IngestResult preprocess(const CsvTable& table, const DatasetSchema& schema) {
  IngestResult out;
  out.rows_in = table.rows.size();

  std::vector<std::size_t> feature_idx, sensitive_idx;
  for (const auto& f : schema.features)
    feature_idx.push_back(column_index(table, f.name));
  for (const auto& name : schema.sensitive)
    sensitive_idx.push_back(column_index(table, name));
  const std::size_t target_idx = column_index(table, schema.target);
  std::optional<std::size_t> location_idx;
  if (!schema.location.empty())
    location_idx = column_index(table, schema.location);

  // First pass: decide which rows survive (all required cells present, all
  // numeric cells parsable) and collect column statistics on the survivors.
  std::vector<bool> keep(table.rows.size(), true);
  const std::size_t nf = schema.features.size();
  std::vector<std::set<std::string>> feature_values(nf);
  std::vector<double> ord_min(nf, 0.0), ord_max(nf, 0.0);
  std::vector<bool> ord_seen(nf, false);
  std::vector<std::set<std::string>> sensitive_values(schema.sensitive.size());
  std::vector<double> sensitive_sum(schema.sensitive.size(), 0.0);
  std::vector<std::size_t> sensitive_n(schema.sensitive.size(), 0);
  std::vector<bool> sensitive_numeric(schema.sensitive.size(), true);
  std::set<std::string> target_values;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      keep[r] = false;
      continue;
    }
    const auto required_ok = [&](std::size_t idx) {
      return !is_missing(row[idx]);
    };
    bool ok = required_ok(target_idx) &&
              (!location_idx || required_ok(*location_idx));
    for (const std::size_t idx : feature_idx) ok = ok && required_ok(idx);
    for (const std::size_t idx : sensitive_idx) ok = ok && required_ok(idx);
    if (ok) {
      for (std::size_t f = 0; f < nf; ++f) {
        if (schema.features[f].kind == ColumnKind::Ordinal &&
            !parse_number(row[feature_idx[f]]))
          ok = false;
      }
    }
    if (!ok) {
      keep[r] = false;
      continue;
    }
    for (std::size_t f = 0; f < nf; ++f) {
      const std::string& cell = row[feature_idx[f]];
      switch (schema.features[f].kind) {
        case ColumnKind::Ordinal: {
          const double v = *parse_number(cell);
          if (!ord_seen[f]) {
            ord_min[f] = ord_max[f] = v;
            ord_seen[f] = true;
          } else {
            ord_min[f] = std::min(ord_min[f], v);
            ord_max[f] = std::max(ord_max[f], v);
          }
          break;
        }
        case ColumnKind::Categorical:
        case ColumnKind::Binary:
          feature_values[f].insert(cell);
          break;
      }
    }
    for (std::size_t s = 0; s < sensitive_idx.size(); ++s) {
      const std::string& cell = row[sensitive_idx[s]];
      sensitive_values[s].insert(cell);
      if (const auto v = parse_number(cell)) {
        sensitive_sum[s] += *v;
        sensitive_n[s] += 1;
      } else {
        sensitive_numeric[s] = false;
      }
    }
    target_values.insert(row[target_idx]);
  }

  // Column encodings from the pass-one statistics.
  const auto target_codes = binary_map(target_values, schema.target);
  std::vector<std::map<std::string, double>> feature_codes(nf);
  std::vector<std::vector<std::string>> onehot_values(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    switch (schema.features[f].kind) {
      case ColumnKind::Ordinal:
        out.feature_names.push_back(schema.features[f].name);
        break;
      case ColumnKind::Binary:
        feature_codes[f] = binary_map(feature_values[f], schema.features[f].name);
        out.feature_names.push_back(schema.features[f].name);
        break;
      case ColumnKind::Categorical:
        onehot_values[f].assign(feature_values[f].begin(),
                                feature_values[f].end());
        for (const auto& v : onehot_values[f])
          out.feature_names.push_back(schema.features[f].name + "=" + v);
        break;
    }
  }
  // Sensitive columns: numeric with more than two values binarize at the
  // global mean; otherwise a direct two-value map.
  std::vector<std::map<std::string, double>> sensitive_codes(schema.sensitive.size());
  std::vector<std::optional<double>> sensitive_threshold(schema.sensitive.size());
  for (std::size_t s = 0; s < sensitive_idx.size(); ++s) {
    if (sensitive_numeric[s] && sensitive_values[s].size() > 2) {
      sensitive_threshold[s] =
          sensitive_sum[s] / static_cast<double>(sensitive_n[s]);
    } else {
      sensitive_codes[s] = binary_map(sensitive_values[s], schema.sensitive[s]);
    }
    out.sensitive_names.push_back(schema.sensitive[s]);
  }

  // Second pass: emit records.
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (!keep[r]) continue;
    const auto& row = table.rows[r];
    Record rec;
    for (std::size_t f = 0; f < nf; ++f) {
      const std::string& cell = row[feature_idx[f]];
      switch (schema.features[f].kind) {
        case ColumnKind::Ordinal: {
          const double v = *parse_number(cell);
          const double span = ord_max[f] - ord_min[f];
          rec.x.push_back(span > 0 ? (v - ord_min[f]) / span : 0.0);
          break;
        }
        case ColumnKind::Binary:
          rec.x.push_back(feature_codes[f].at(cell));
          break;
        case ColumnKind::Categorical:
          for (const auto& v : onehot_values[f])
            rec.x.push_back(v == cell ? 1.0 : 0.0);
          break;
      }
    }
    for (std::size_t s = 0; s < sensitive_idx.size(); ++s) {
      const std::string& cell = row[sensitive_idx[s]];
      if (sensitive_threshold[s]) {
        rec.a.push_back(*parse_number(cell) >= *sensitive_threshold[s] ? 1.0
                                                                       : 0.0);
      } else {
        rec.a.push_back(sensitive_codes[s].at(cell));
      }
    }
    rec.y = static_cast<int>(target_codes.at(row[target_idx]));
    out.records.push_back(std::move(rec));
    if (location_idx) out.locations.push_back(row[*location_idx]);
  }
  out.rows_dropped = out.rows_in - out.records.size();
  return out;
}

PartitionResult partition_sites(const IngestResult& data, int min_site_size) {
  if (data.locations.size() != data.records.size())
    throw std::runtime_error("partition_sites: no location column was ingested");
  if (min_site_size < 1)
    throw std::invalid_argument("partition_sites: min_site_size must be >= 1");

  std::map<std::string, std::vector<Record>> by_location;
  for (std::size_t i = 0; i < data.records.size(); ++i)
    by_location[data.locations[i]].push_back(data.records[i]);

  PartitionResult out;
  int id = 0;
  for (auto& [key, records] : by_location) {
    if (records.size() < static_cast<std::size_t>(min_site_size)) {
      out.excluded_records += records.size();
      out.excluded_locations += 1;
      continue;
    }
    out.site_keys.push_back(key);
    out.sites.push_back(Site::empirical(id++, std::move(records)));
  }
  if (out.sites.empty())
    throw std::runtime_error("partition_sites: no site meets min_site_size");
  return out;
}

std::vector<Site> resize_arm_pool(std::vector<Site> sites, int m_target,
                                  Rng& rng) {
  if (sites.empty())
    throw std::invalid_argument("resize_arm_pool: no sites");
  if (m_target < 1)
    throw std::invalid_argument("resize_arm_pool: m_target must be >= 1");
  const std::size_t target = static_cast<std::size_t>(m_target);

  std::vector<Site> out;
  if (sites.size() > target) {
    auto perm = rng.permutation(sites.size());
    perm.resize(target);
    std::sort(perm.begin(), perm.end());  // keep original relative order
    for (const std::size_t i : perm) out.push_back(std::move(sites[i]));
  } else {
    out = std::move(sites);
    const std::size_t originals = out.size();
    while (out.size() < target) {
      const std::size_t pick =
          static_cast<std::size_t>(rng.uniform_index(originals));
      out.push_back(out[pick]);
    }
  }
  return out;
}

}  // namespace repsample
