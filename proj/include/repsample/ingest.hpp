#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "repsample/core.hpp"
#include "repsample/population.hpp"
#include "repsample/rng.hpp"

namespace repsample {

// Parsed CSV: header row plus string cells (RFC 4180 quoting).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_file(const std::string& path);
CsvTable parse_csv(const std::string& text);

enum class ColumnKind { Ordinal, Categorical, Binary };

struct FeatureColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Ordinal;
};

struct DatasetSchema {
  std::vector<FeatureColumn> features;
  std::vector<std::string> sensitive;
  std::string target;
  std::string location;  // empty when the dataset has no site column
  int min_site_size = 1000;
};

DatasetSchema schema_from_json_file(const std::string& path);
DatasetSchema schema_from_json(const std::string& json_text);

struct IngestResult {
  std::vector<Record> records;
  std::vector<std::string> locations;  // parallel to records; empty if none
  std::vector<std::string> feature_names;    // post one-hot expansion
  std::vector<std::string> sensitive_names;
  std::size_t rows_in = 0;
  std::size_t rows_dropped = 0;  // missing values or unparsable ordinals
};

// Appendix-style preprocessing: ordinals min-max scaled to [0,1],
// categoricals one-hot encoded, binaries mapped to {0,1}; continuous
// sensitive columns are binarized by thresholding at the column mean,
// computed over the full retained table before any partitioning. Rows with
// missing required values are dropped and counted.
IngestResult preprocess(const CsvTable& table, const DatasetSchema& schema);

struct PartitionResult {
  std::vector<Site> sites;
  std::vector<std::string> site_keys;  // location value per site, sorted
  std::size_t excluded_records = 0;
  std::size_t excluded_locations = 0;
};

// One site per distinct location value with at least min_site_size records;
// smaller locations are excluded and counted. Site order follows the sorted
// location keys, so shuffled input yields the same partition.
PartitionResult partition_sites(const IngestResult& data, int min_site_size);

// Random subsample (without replacement) or duplication until exactly
// m_target sites; duplication keeps every original at least once.
std::vector<Site> resize_arm_pool(std::vector<Site> sites, int m_target,
                                  Rng& rng);

}  // namespace repsample
