#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace clickcfa::baselines {

struct NgramEncoding {
    int n = 4;
    std::vector<std::vector<int>> grams; // sliding windows of event-type codes
};

// Contiguous sliding windows over a type-code sequence; short sequences yield
// zero grams.
NgramEncoding ngram_encode(const std::vector<int>& type_codes, int n);

// 5n-dim one-hot concatenation per gram, row-major; the recurrent baseline's
// input rows.
std::vector<double> ngram_rows(const NgramEncoding& enc);

std::string gram_to_string(const std::vector<int>& gram); // "Pl,Pa,Sf,Pl"

} // namespace clickcfa::baselines
