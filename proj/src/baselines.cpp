#include "clickcfa/baselines.hpp"

#include "clickcfa/errors.hpp"
#include "clickcfa/events.hpp"

namespace clickcfa::baselines {

NgramEncoding ngram_encode(const std::vector<int>& type_codes, int n) {
    if (n < 2) fail(ErrorKind::Usage, "n-gram size must be at least 2");
    NgramEncoding enc;
    enc.n = n;
    if (type_codes.size() >= static_cast<std::size_t>(n)) {
        for (std::size_t i = 0; i + n <= type_codes.size(); ++i)
            enc.grams.emplace_back(type_codes.begin() + i, type_codes.begin() + i + n);
    }
    return enc;
}

std::vector<double> ngram_rows(const NgramEncoding& enc) {
    const std::size_t dim = 5 * static_cast<std::size_t>(enc.n);
    std::vector<double> rows(enc.grams.size() * dim, 0.0);
    for (std::size_t g = 0; g < enc.grams.size(); ++g) {
        for (int j = 0; j < enc.n; ++j) rows[g * dim + 5 * j + enc.grams[g][j]] = 1.0;
    }
    return rows;
}

std::string gram_to_string(const std::vector<int>& gram) {
    std::string out;
    for (std::size_t i = 0; i < gram.size(); ++i) {
        if (i) out += ',';
        out += click::event_type_name(static_cast<click::EventType>(gram[i]));
    }
    return out;
}

} // namespace clickcfa::baselines
