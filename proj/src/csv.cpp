#include "platevem/csv.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "platevem/errors.hpp"

namespace platevem {

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::row(std::initializer_list<Field> fields) {
    if (fields.size() != columns_) throw InvalidArgument("CSV row has the wrong number of fields");
    bool first = true;
    for (const Field& f : fields) {
        if (!first) out_ << ',';
        first = false;
        if (const auto* i = std::get_if<long long>(&f))
            out_ << *i;
        else if (const auto* d = std::get_if<double>(&f))
            out_ << format_double(*d);
        else
            out_ << std::get<std::string>(f);
    }
    out_ << '\n';
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    t.header = split(line);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        for (const std::string& cell : split(line)) {
            try {
                row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad number \"" + cell + "\"");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace platevem
