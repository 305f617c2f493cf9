#pragma once

#include <vector>

#include "rstar/chain.hpp"

namespace rstar::testing {

// Dataset with explicit rows; every row lands in the train partition unless
// test indices are supplied.
inline LabeledDataset make_dataset(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                   std::vector<int> test_idx = {}) {
    LabeledDataset ds;
    ds.n_rows = static_cast<int>(x.size());
    ds.n_features = static_cast<int>(x[0].size());
    ds.labels = y;
    ds.n_classes = 0;
    for (int label : y) ds.n_classes = std::max(ds.n_classes, label + 1);
    for (const auto& row : x) ds.features.insert(ds.features.end(), row.begin(), row.end());
    std::vector<char> is_test(ds.n_rows, 0);
    for (int t : test_idx) is_test[t] = 1;
    for (int i = 0; i < ds.n_rows; ++i) (is_test[i] ? ds.test_idx : ds.train_idx).push_back(i);
    return ds;
}

}  // namespace rstar::testing
