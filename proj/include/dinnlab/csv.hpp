#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Minimal CSV helpers shared by trajectory, dataset and report writers.
namespace dinnlab::csv {

struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

std::vector<std::string> split(const std::string& line);
std::string format_number(double v);

void write_row(std::ostream& os, const std::vector<std::string>& cells);
void write_numbers(std::ostream& os, const std::vector<double>& values);

// Reads a header line plus all-numeric rows; throws Ingestion with the line number on bad cells.
NumericTable read_numeric(const std::string& path);

} // namespace dinnlab::csv
