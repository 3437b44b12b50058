#pragma once

#include <string>
#include <vector>

namespace sagnac {

/// A labelled, evenly sampled channel.
struct NamedSeries {
    std::string name;
    std::vector<double> values;

    friend bool operator==(const NamedSeries&, const NamedSeries&) = default;
};

} // namespace sagnac
