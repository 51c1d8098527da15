#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loclearn/common.hpp"

namespace loclearn {

struct CsvDataset {
    std::size_t dims = 0;
    std::vector<Point> points;
    std::vector<Real> labels;  // empty when the file has no y column
    bool has_labels() const { return !labels.empty(); }
};

// Header `x1,...,xd[,y]`, decimal-point floats.
CsvDataset read_csv_dataset(const std::string& path);
void write_csv_dataset(const std::string& path, const CsvDataset& data);

// Shortest round-trip formatting so reruns are byte-identical.
std::string format_real(Real v);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace loclearn
