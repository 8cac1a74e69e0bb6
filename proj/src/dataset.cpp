#include "shapmc/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shapmc {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

Dataset::Dataset(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
    if (names_.empty()) throw std::invalid_argument("Dataset: no columns");
    if (values_.empty() || values_.size() % names_.size() != 0)
        throw std::invalid_argument("Dataset: value count is not a multiple of column count");
    rows_ = values_.size() / names_.size();
    for (double v : values_)
        if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite entry");
}

Dataset Dataset::from_rows(std::vector<std::string> names,
                           const std::vector<std::vector<double>>& rows) {
    std::vector<double> values;
    values.reserve(rows.size() * names.size());
    for (const auto& r : rows) {
        if (r.size() != names.size())
            throw std::invalid_argument("Dataset: row length != column count");
        values.insert(values.end(), r.begin(), r.end());
    }
    return Dataset(std::move(names), std::move(values));
}

Dataset Dataset::from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("Dataset: empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names = split_csv_line(line);
    if (names.empty()) throw std::invalid_argument("Dataset: empty header");

    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != names.size())
            throw std::invalid_argument("Dataset: line " + std::to_string(lineno) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(names.size()));
        for (const auto& f : fields) {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(f, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("Dataset: bad number '" + f + "' on line " +
                                            std::to_string(lineno));
            }
            while (pos < f.size() && (f[pos] == ' ' || f[pos] == '\t')) ++pos;
            if (pos != f.size())
                throw std::invalid_argument("Dataset: bad number '" + f + "' on line " +
                                            std::to_string(lineno));
            values.push_back(v);
        }
    }
    if (values.empty()) throw std::invalid_argument("Dataset: no data rows");
    return Dataset(std::move(names), std::move(values));
}

Dataset Dataset::from_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("Dataset: cannot open " + path);
    return from_csv(in);
}

double Dataset::column_mean(int j) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < rows_; ++k) sum += row(k)[static_cast<std::size_t>(j)];
    return sum / static_cast<double>(rows_);
}

}  // namespace shapmc
