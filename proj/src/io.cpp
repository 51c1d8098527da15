#include "loclearn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace loclearn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t start = 0;
        while (start < field.size() && field[start] == ' ') ++start;
        fields.push_back(field.substr(start));
    }
    return fields;
}

}  // namespace

CsvDataset read_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV file: " + path);
    const auto header = split_csv_line(line);
    if (header.empty()) throw ConfigError("CSV header missing: " + path);
    bool labeled = header.back() == "y";
    const std::size_t dims = labeled ? header.size() - 1 : header.size();
    if (dims == 0) throw ConfigError("CSV needs at least one coordinate column: " + path);
    for (std::size_t k = 0; k < dims; ++k) {
        const std::string expected = "x" + std::to_string(k + 1);
        if (header[k] != expected)
            throw ConfigError("CSV header must be x1,...,xd[,y]; got column '" + header[k] + "'");
    }

    CsvDataset out;
    out.dims = dims;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ConfigError("CSV row " + std::to_string(line_no) + " has wrong arity");
        Point p(dims);
        for (std::size_t k = 0; k < dims; ++k) p[k] = std::stod(fields[k]);
        out.points.push_back(std::move(p));
        if (labeled) out.labels.push_back(std::stod(fields[dims]));
    }
    return out;
}

void write_csv_dataset(const std::string& path, const CsvDataset& data) {
    std::ofstream outf(path);
    if (!outf) throw ConfigError("cannot write CSV file: " + path);
    for (std::size_t k = 0; k < data.dims; ++k) outf << (k ? "," : "") << "x" << (k + 1);
    if (data.has_labels()) outf << ",y";
    outf << "\n";
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        for (std::size_t k = 0; k < data.dims; ++k)
            outf << (k ? "," : "") << format_real(data.points[i][k]);
        if (data.has_labels()) outf << "," << format_real(data.labels[i]);
        outf << "\n";
    }
}

std::string format_real(Real v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        if (back == v) return probe;
    }
    return buf;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open JSON file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write JSON file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace loclearn
