#include "libs/testset.hpp"

#include <fstream>

#include "libs/errors.hpp"

namespace libs {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open test set file: " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

TestSet TestSet::load(const std::string& source_path, const std::string& reference_path,
                      const std::string& meta_path) {
    auto sources = read_lines(source_path);
    auto references = read_lines(reference_path);
    auto metas = read_lines(meta_path);
    if (sources.size() != references.size() || sources.size() != metas.size()) {
        throw invalid_input("test set files are not aligned: " +
                            std::to_string(sources.size()) + " sources, " +
                            std::to_string(references.size()) + " references, " +
                            std::to_string(metas.size()) + " metadata lines");
    }
    TestSet set;
    set.items.reserve(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        auto tab = metas[i].find('\t');
        if (tab == std::string::npos) {
            throw parse_error(meta_path, static_cast<long>(i + 1),
                              "expected source_lang<TAB>target_lang");
        }
        set.items.push_back({sources[i], references[i], metas[i].substr(0, tab),
                             metas[i].substr(tab + 1)});
    }
    return set;
}

void TestSet::save(const std::string& source_path, const std::string& reference_path,
                   const std::string& meta_path) const {
    std::ofstream src(source_path);
    std::ofstream ref(reference_path);
    std::ofstream meta(meta_path);
    if (!src || !ref || !meta) {
        throw invalid_input("cannot write test set files");
    }
    for (const auto& item : items) {
        src << item.source << '\n';
        ref << item.reference << '\n';
        meta << item.source_lang << '\t' << item.target_lang << '\n';
    }
}

}  // namespace libs
