#include "libs/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace libs {

namespace {

constexpr SurrogateMode kModes[3] = {SurrogateMode::target, SurrogateMode::english,
                                     SurrogateMode::copy};

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) {
        words.push_back(w);
    }
    return words;
}

}  // namespace

const char* to_string(SurrogateMode mode) {
    switch (mode) {
        case SurrogateMode::target: return "target";
        case SurrogateMode::english: return "english";
        case SurrogateMode::copy: return "copy";
    }
    return "?";
}

const SurrogateModeParams& SurrogateParams::of(SurrogateMode mode) const {
    switch (mode) {
        case SurrogateMode::english: return english;
        case SurrogateMode::copy: return copy;
        default: return target;
    }
}

SurrogateModeParams& SurrogateParams::of(SurrogateMode mode) {
    switch (mode) {
        case SurrogateMode::english: return english;
        case SurrogateMode::copy: return copy;
        default: return target;
    }
}

double crossover_length(double pi_target, double pi_off, double rho_target, double rho_off) {
    if (pi_target <= 0 || pi_off <= 0 || rho_target <= 0 || rho_off <= 0) {
        throw invalid_input("crossover_length requires positive probabilities");
    }
    if (rho_off <= rho_target) {
        throw invalid_input("no crossover: off-target continuation probability (" +
                            std::to_string(rho_off) + ") does not exceed the on-target one (" +
                            std::to_string(rho_target) + ")");
    }
    return (std::log(pi_target) - std::log(pi_off)) /
           (std::log(rho_off) - std::log(rho_target));
}

double crossover_length(const SurrogateParams& params, SurrogateMode off_mode) {
    const auto& off = params.of(off_mode);
    return crossover_length(params.target.pi, off.pi, params.target.rho, off.rho);
}

SurrogateModel::SurrogateModel(SurrogateSpec spec) : spec_(std::move(spec)) {
    auto require = [](bool ok, const std::string& constraint) {
        if (!ok) {
            throw invalid_input("surrogate spec violates: " + constraint);
        }
    };

    require(spec_.lexicons.count(spec_.source_lang) == 1, "source_lang in lexicons");
    require(spec_.lexicons.count(spec_.target_lang) == 1, "target_lang in lexicons");
    require(spec_.lexicons.count(spec_.pivot_lang) == 1, "pivot_lang in lexicons");
    require(spec_.source_lang != spec_.target_lang, "source_lang != target_lang");
    require(spec_.target_lang != spec_.pivot_lang, "target_lang != pivot_lang");
    require(spec_.source_lang != spec_.pivot_lang, "source_lang != pivot_lang");

    const auto& p = spec_.params;
    require(p.target.pi > p.english.pi, "pi.target > pi.english");
    require(p.target.pi > p.copy.pi, "pi.target > pi.copy");
    require(p.english.rho >= p.target.rho, "rho.english >= rho.target");
    require(p.copy.rho >= p.target.rho, "rho.copy >= rho.target");
    double mass = 0.0;
    for (SurrogateMode m : kModes) {
        const auto& mp = p.of(m);
        require(mp.pi > 0.0 && mp.pi < 1.0, "pi in (0,1)");
        require(mp.rho > 0.0 && mp.rho < 1.0, "rho in (0,1)");
        require(mp.first_alternates >= 0, "first_alternates >= 0");
        require(mp.alternate_mass >= 0.0, "alternate_mass >= 0");
        require((mp.first_alternates == 0) == (mp.alternate_mass == 0.0),
                "first_alternates and alternate_mass set together");
        mass += mp.pi + mp.alternate_mass;
    }
    require(mass <= 1.0 + 1e-12, "first-step priors and alternate masses sum to <= 1");

    // Vocabulary: BOS, EOS, then every language's words in lexicon order,
    // languages ordered by code.
    std::vector<std::string> entries{"<s>", "</s>"};
    std::set<std::string> seen_words;
    for (const auto& [lang, words] : spec_.lexicons) {
        require(!words.empty(), "non-empty lexicon for " + lang);
        for (const auto& w : words) {
            require(seen_words.insert(w).second,
                    "lexicons pairwise disjoint (duplicate word: " + w + ")");
            entries.push_back(std::string(Vocabulary::kDefaultMarker) + w);
            token_lang_[entries.back()] = lang;
        }
    }
    vocab_ = std::make_shared<Vocabulary>(std::move(entries));

    auto lexicon_tokens = [&](const std::string& lang) {
        std::vector<TokenId> ids;
        for (const auto& w : spec_.lexicons.at(lang)) {
            ids.push_back(vocab_->id_of(std::string(Vocabulary::kDefaultMarker) + w));
        }
        return ids;
    };
    const std::string mode_lang[3] = {spec_.target_lang, spec_.pivot_lang, spec_.source_lang};
    lexicon_ids_.resize(3);
    for (int m = 0; m < 3; ++m) {
        lexicon_ids_[m] = lexicon_tokens(mode_lang[m]);
        const auto& mp = p.of(kModes[m]);
        require(mp.first_alternates < static_cast<int>(lexicon_ids_[m].size()),
                "first_alternates < lexicon size");
        const auto& words = spec_.lexicons.at(mode_lang[m]);
        for (int i = 0; i < static_cast<int>(words.size()); ++i) {
            lexicon_pos_[m][words[i]] = i;
        }
    }

    auto build_dict = [&](const std::string& dst_lang, std::map<TokenId, TokenId>& out) {
        std::string key = spec_.source_lang + ">" + dst_lang;
        auto it = spec_.dictionaries.find(key);
        require(it != spec_.dictionaries.end(), "dictionary " + key + " present");
        const auto& dst_words = spec_.lexicons.at(dst_lang);
        std::set<std::string> dst_set(dst_words.begin(), dst_words.end());
        for (const auto& src_word : spec_.lexicons.at(spec_.source_lang)) {
            auto hit = it->second.find(src_word);
            require(hit != it->second.end(), "dictionary " + key + " covers " + src_word);
            require(dst_set.count(hit->second) == 1,
                    "dictionary " + key + " maps into the " + dst_lang + " lexicon");
            TokenId src_id = vocab_->id_of(std::string(Vocabulary::kDefaultMarker) + src_word);
            TokenId dst_id = vocab_->id_of(std::string(Vocabulary::kDefaultMarker) + hit->second);
            out[src_id] = dst_id;
        }
    };
    build_dict(spec_.target_lang, to_target_);
    build_dict(spec_.pivot_lang, to_pivot_);
}

SurrogateModel::Scripts SurrogateModel::build_scripts(const std::string& source) const {
    Scripts scripts;
    auto words = split_words(source);
    if (words.empty()) {
        throw invalid_input("surrogate source sentence is empty");
    }
    for (const auto& w : words) {
        TokenId id = vocab_->find(std::string(Vocabulary::kDefaultMarker) + w);
        if (id < 0 || token_lang_.at(vocab_->token(id)) != spec_.source_lang) {
            throw invalid_input("source word not in the source lexicon: " + w);
        }
        scripts.by_mode[0].push_back(to_target_.at(id));
        scripts.by_mode[1].push_back(to_pivot_.at(id));
        scripts.by_mode[2].push_back(id);
    }
    for (int m = 0; m < 3; ++m) {
        scripts.by_mode[m].push_back(vocab_->eos_id());

        // Opening alternates: the words following the scripted opener in
        // the mode lexicon, cyclically.
        const auto& mp = spec_.params.of(kModes[m]);
        if (mp.first_alternates > 0) {
            const auto& lex = lexicon_ids_[m];
            const std::string& opener = vocab_->token(scripts.by_mode[m][0]);
            int pos = lexicon_pos_[m].at(opener.substr(Vocabulary::kDefaultMarker.size()));
            for (int j = 1; j <= mp.first_alternates; ++j) {
                scripts.alternates[m].push_back(lex[(pos + j) % lex.size()]);
            }
        }
    }
    return scripts;
}

std::shared_ptr<const SurrogateModel::Scripts> SurrogateModel::scripts_for(
    const std::string& source) const {
    {
        std::shared_lock lock(scripts_mutex_);
        auto it = scripts_cache_.find(source);
        if (it != scripts_cache_.end()) {
            return it->second;
        }
    }
    auto scripts = std::make_shared<const Scripts>(build_scripts(source));
    std::unique_lock lock(scripts_mutex_);
    return scripts_cache_.emplace(source, std::move(scripts)).first->second;
}

std::vector<double> SurrogateModel::next_token_logprobs(const std::string& source,
                                                        const std::string& target_lang,
                                                        const Hypothesis& prefix) const {
    if (prefix.finished) {
        throw invalid_state("next_token_logprobs called on a finished hypothesis");
    }
    if (prefix.tokens.empty() || prefix.tokens.front() != vocab_->bos_id()) {
        throw invalid_input("prefix must begin with BOS");
    }
    if (target_lang != spec_.target_lang) {
        throw invalid_input("surrogate built for target language " + spec_.target_lang +
                            ", got " + target_lang);
    }

    auto scripts_ptr = scripts_for(source);
    const Scripts& scripts = *scripts_ptr;
    const int vsize = vocab_->size();
    std::vector<double> probs(vsize, 0.0);
    // Noise never lands on BOS or EOS: EOS is reachable only where a
    // script puts it, mirroring how a trained model keeps mid-sentence
    // termination improbable. Content tokens start at id 2.
    const int content = vsize - 2;

    int generated = prefix.generated_length();
    if (generated == 0) {
        int assigned_count = 0;
        double assigned_mass = 0.0;
        for (int m = 0; m < 3; ++m) {
            const auto& mp = spec_.params.of(kModes[m]);
            probs[scripts.by_mode[m][0]] = mp.pi;
            ++assigned_count;
            assigned_mass += mp.pi;
            for (TokenId alt : scripts.alternates[m]) {
                probs[alt] = mp.alternate_mass / mp.first_alternates;
                ++assigned_count;
                assigned_mass += mp.alternate_mass / mp.first_alternates;
            }
        }
        double noise = 1.0 - assigned_mass;
        int noise_count = content - assigned_count;
        if (noise_count > 0 && noise > 0.0) {
            for (TokenId id = 2; id < vsize; ++id) {
                if (probs[id] == 0.0) {
                    probs[id] = noise / noise_count;
                }
            }
        }
    } else {
        // Mode is fixed by the first generated token.
        TokenId first = prefix.tokens[1];
        int mode = -1;
        for (int m = 0; m < 3 && mode < 0; ++m) {
            if (first == scripts.by_mode[m][0]) {
                mode = m;
            }
            for (TokenId alt : scripts.alternates[m]) {
                if (first == alt) {
                    mode = m;
                    break;
                }
            }
        }
        if (mode >= 0 && generated < static_cast<int>(scripts.by_mode[mode].size())) {
            const auto& mp = spec_.params.of(kModes[mode]);
            TokenId scripted = scripts.by_mode[mode][generated];
            probs[scripted] = mp.rho;
            int noise_count = content - (scripted >= 2 ? 1 : 0);
            double noise = (1.0 - mp.rho) / noise_count;
            for (TokenId id = 2; id < vsize; ++id) {
                if (id != scripted) {
                    probs[id] = noise;
                }
            }
        } else {
            double uniform = 1.0 / content;
            for (TokenId id = 2; id < vsize; ++id) {
                probs[id] = uniform;
            }
        }
    }

    double sum = 0.0;
    for (double v : probs) {
        sum += v;
    }
    std::vector<double> logprobs(vsize, -std::numeric_limits<double>::infinity());
    for (TokenId id = 0; id < vsize; ++id) {
        if (probs[id] > 0.0) {
            logprobs[id] = std::log(probs[id] / sum);
        }
    }
    return logprobs;
}

std::vector<TokenId> SurrogateModel::scripted_sequence(const std::string& source,
                                                       SurrogateMode mode) const {
    return scripts_for(source)->by_mode[static_cast<int>(mode)];
}

std::vector<TokenId> SurrogateModel::opening_alternates(const std::string& source,
                                                        SurrogateMode mode) const {
    return scripts_for(source)->alternates[static_cast<int>(mode)];
}

std::optional<std::string> SurrogateModel::language_of_token(TokenId id) const {
    auto it = token_lang_.find(vocab_->token(id));
    if (it == token_lang_.end()) {
        return std::nullopt;
    }
    return it->second;
}

namespace {

nlohmann::json mode_params_json(const SurrogateParams& p, double SurrogateModeParams::*field) {
    return nlohmann::json{{"target", p.target.*field},
                          {"english", p.english.*field},
                          {"copy", p.copy.*field}};
}

}  // namespace

void SurrogateModel::save(const std::string& path) const {
    nlohmann::json doc;
    doc["source_lang"] = spec_.source_lang;
    doc["target_lang"] = spec_.target_lang;
    doc["pivot_lang"] = spec_.pivot_lang;
    doc["pi"] = mode_params_json(spec_.params, &SurrogateModeParams::pi);
    doc["rho"] = mode_params_json(spec_.params, &SurrogateModeParams::rho);
    nlohmann::json branch;
    for (SurrogateMode m : kModes) {
        const auto& mp = spec_.params.of(m);
        if (mp.first_alternates > 0) {
            branch[to_string(m)] = {{"count", mp.first_alternates}, {"mass", mp.alternate_mass}};
        }
    }
    if (!branch.is_null()) {
        doc["branch"] = branch;
    }
    doc["lexicons"] = spec_.lexicons;
    doc["dictionary"] = spec_.dictionaries;

    std::ofstream out(path);
    if (!out) {
        throw invalid_input("cannot write surrogate spec file: " + path);
    }
    out << doc.dump(2) << '\n';
}

std::shared_ptr<SurrogateModel> SurrogateModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open surrogate spec file: " + path);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }

    try {
        SurrogateSpec spec;
        spec.source_lang = doc.at("source_lang").get<std::string>();
        spec.target_lang = doc.at("target_lang").get<std::string>();
        spec.pivot_lang = doc.at("pivot_lang").get<std::string>();
        for (SurrogateMode m : kModes) {
            auto& mp = spec.params.of(m);
            mp.pi = doc.at("pi").at(to_string(m)).get<double>();
            mp.rho = doc.at("rho").at(to_string(m)).get<double>();
            mp.first_alternates = 0;
            mp.alternate_mass = 0.0;
            if (doc.contains("branch") && doc["branch"].contains(to_string(m))) {
                mp.first_alternates = doc["branch"][to_string(m)].at("count").get<int>();
                mp.alternate_mass = doc["branch"][to_string(m)].at("mass").get<double>();
            }
        }
        spec.lexicons =
            doc.at("lexicons").get<std::map<std::string, std::vector<std::string>>>();
        spec.dictionaries =
            doc.at("dictionary")
                .get<std::map<std::string, std::map<std::string, std::string>>>();
        return std::make_shared<SurrogateModel>(std::move(spec));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
}

}  // namespace libs
