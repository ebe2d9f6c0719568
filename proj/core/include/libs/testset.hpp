#pragma once

#include <string>
#include <vector>

namespace libs {

struct TestItem {
    std::string source;
    std::string reference;
    std::string source_lang;
    std::string target_lang;
};

/// Aligned evaluation set stored as three files: plain-text source and
/// reference (one sentence per line) plus a metadata TSV with
/// "source_lang<TAB>target_lang" per line.
struct TestSet {
    std::vector<TestItem> items;

    static TestSet load(const std::string& source_path, const std::string& reference_path,
                        const std::string& meta_path);
    void save(const std::string& source_path, const std::string& reference_path,
              const std::string& meta_path) const;

    std::size_t size() const { return items.size(); }
};

}  // namespace libs
