#ifndef BETAFORGE_DATASET_HPP
#define BETAFORGE_DATASET_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace betaforge::pipeline {

enum class DatasetVariant { basic, alpha_beta, alpha_beta_reg, delta, delta_reg };

const char* to_string(DatasetVariant v);

// Row-major feature matrix with binary labels. Width is always
// n_informative + n_zero_variance; zero-variance columns sit at the end.
struct LabeledDataset {
    std::vector<std::string> feature_names;
    std::vector<double> values; // n_rows * width, row-major
    std::vector<int> labels;    // 0 or 1
    DatasetVariant variant = DatasetVariant::basic;
    std::size_t n_informative = 0;
    std::size_t n_zero_variance = 0;

    std::size_t width() const { return n_informative + n_zero_variance; }
    std::size_t n_rows() const { return labels.size(); }

    double at(std::size_t row, std::size_t col) const {
        return values[row * width() + col];
    }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * width(), width()};
    }
    void push_row(std::span<const double> feats, int label) {
        if (feats.size() != width())
            throw std::invalid_argument("row width mismatch");
        values.insert(values.end(), feats.begin(), feats.end());
        labels.push_back(label);
    }
};

} // namespace betaforge::pipeline

#endif
