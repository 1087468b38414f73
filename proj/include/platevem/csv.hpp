#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace platevem {

/// Minimal comma-separated writer; doubles are printed so that they read
/// back exactly.
class CsvWriter {
public:
    using Field = std::variant<long long, double, std::string>;

    CsvWriter(std::ostream& out, const std::vector<std::string>& header);
    void row(std::initializer_list<Field> fields);

private:
    std::ostream& out_;
    std::size_t columns_;
};

/// Parses a CSV file with a header line into columns of doubles.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::string& path);

}  // namespace platevem
