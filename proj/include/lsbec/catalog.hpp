#pragma once

#include <string>
#include <vector>

namespace lsbec {

// One configured solve inside a catalog entry. Reference values live in the
// config text itself (reference_mu / reference_energy); `asserted` says
// whether downstream checks may treat them as hard targets. Annotations with
// uncertain provenance keep asserted = false and explain themselves in `note`.
struct CatalogRun {
    std::string label;
    std::string config_text;
    bool asserted = true;
    std::string note;
};

struct CatalogEntry {
    std::string name;
    std::string title;
    std::vector<CatalogRun> runs;
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry* find_entry(const std::string& name);

} // namespace lsbec
