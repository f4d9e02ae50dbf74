#include "vtd/data.hpp"

namespace vtd::data {

std::size_t unmasked_steps(const LongitudinalDataset& d) {
    std::size_t n = 0;
    for (const auto& p : d.patients)
        for (bool m : p.mask)
            if (m) ++n;
    return n;
}

double treated_fraction(const LongitudinalDataset& d) {
    std::size_t n = 0, treated = 0;
    for (const auto& p : d.patients)
        for (std::size_t t = 0; t < p.mask.size(); ++t)
            if (p.mask[t]) {
                ++n;
                treated += static_cast<std::size_t>(p.a[t]);
            }
    return n == 0 ? 0.0 : static_cast<double>(treated) / static_cast<double>(n);
}

} // namespace vtd::data
