#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace shapmc {

/// A background dataset: K rows of n finite reals plus column names.
class Dataset {
  public:
    Dataset(std::vector<std::string> names, std::vector<double> values);

    static Dataset from_rows(std::vector<std::string> names,
                             const std::vector<std::vector<double>>& rows);

    /// CSV with a header row of feature names, comma-delimited decimal
    /// literals, no missing values.
    static Dataset from_csv(std::istream& in);
    static Dataset from_csv_file(const std::string& path);

    std::size_t rows() const { return rows_; }
    int cols() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

    std::span<const double> row(std::size_t k) const {
        return {values_.data() + k * names_.size(), names_.size()};
    }
    std::vector<double> row_copy(std::size_t k) const {
        auto r = row(k);
        return {r.begin(), r.end()};
    }

    /// Column mean, used for trivial baselines in tests.
    double column_mean(int j) const;

  private:
    std::vector<std::string> names_;
    std::vector<double> values_;  // row-major
    std::size_t rows_ = 0;
};

}  // namespace shapmc
