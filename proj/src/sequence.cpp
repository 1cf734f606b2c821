// SPDX-License-Identifier: Apache-2.0
#include "boat/sequence.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace boat {

namespace {
constexpr std::uint32_t kAllResidues = (1u << 20) - 1;
}

bool is_canonical(char c) { return residue_index(c) >= 0; }

int residue_index(char c) {
    // kAminoAcids is sorted, but a 26-entry table is simpler and branch-free.
    static const auto table = [] {
        std::array<int, 256> t{};
        t.fill(-1);
        for (int i = 0; i < 20; ++i) t[static_cast<unsigned char>(kAminoAcids[i])] = i;
        return t;
    }();
    return table[static_cast<unsigned char>(c)];
}

Sequence Sequence::validate(const std::string& text, std::size_t length) {
    if (text.size() != length)
        throw LengthMismatch("sequence length " + std::to_string(text.size()) +
                             ", expected " + std::to_string(length));
    for (std::size_t i = 0; i < text.size(); ++i)
        if (!is_canonical(text[i]))
            throw InvalidResidue("non-canonical residue '" + std::string(1, text[i]) +
                                 "' at index " + std::to_string(i));
    return Sequence(text);
}

Sequence validate_sequence(const std::string& text, std::size_t length) {
    return Sequence::validate(text, length);
}

LiabilityPattern::LiabilityPattern(const std::string& pattern) : text_(pattern) {
    std::size_t i = 0;
    while (i < pattern.size()) {
        char c = pattern[i];
        if (c == 'x') {
            masks_.push_back(kAllResidues);
            ++i;
        } else if (c == '[') {
            std::size_t end = pattern.find(']', i);
            if (end == std::string::npos)
                throw ConfigError("unterminated class in liability pattern: " + pattern);
            std::size_t j = i + 1;
            bool negate = j < end && pattern[j] == '^';
            if (negate) ++j;
            std::uint32_t mask = 0;
            for (; j < end; ++j) {
                int r = residue_index(pattern[j]);
                if (r < 0)
                    throw ConfigError("bad residue in liability pattern: " + pattern);
                mask |= 1u << r;
            }
            if (mask == 0) throw ConfigError("empty class in liability pattern: " + pattern);
            masks_.push_back(negate ? (~mask & kAllResidues) : mask);
            i = end + 1;
        } else {
            int r = residue_index(c);
            if (r < 0) throw ConfigError("bad residue in liability pattern: " + pattern);
            masks_.push_back(1u << r);
            ++i;
        }
    }
    if (masks_.empty()) throw ConfigError("empty liability pattern");
}

bool LiabilityPattern::matches_at(const std::string& s, std::size_t pos) const {
    if (pos + masks_.size() > s.size()) return false;
    for (std::size_t j = 0; j < masks_.size(); ++j) {
        int r = residue_index(s[pos + j]);
        if (r < 0 || !(masks_[j] & (1u << r))) return false;
    }
    return true;
}

LiabilityRules LiabilityRules::default_rules() {
    LiabilityRules rules;
    rules.forbidden_motifs.emplace_back("N[^P][ST]");
    return rules;
}

std::vector<LiabilityViolation> liability_check(const Sequence& s, const LiabilityRules& rules) {
    std::vector<LiabilityViolation> out;
    const std::string& str = s.str();
    for (const auto& motif : rules.forbidden_motifs)
        for (std::size_t pos = 0; pos + motif.length() <= str.size(); ++pos)
            if (motif.matches_at(str, pos))
                out.push_back({static_cast<int>(pos), motif.text()});
    return out;
}

MutationSpace MutationSpace::create(Sequence parental, std::vector<int> editable_positions,
                                    std::vector<std::string> allowed, int max_mutations,
                                    LiabilityRules liabilities) {
    if (parental.size() == 0) throw ConfigError("empty parental sequence");
    if (editable_positions.size() != allowed.size())
        throw ConfigError("editable position / allowed set count mismatch");
    if (max_mutations < 1) throw ConfigError("max_mutations must be positive");

    std::vector<std::size_t> order(editable_positions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return editable_positions[a] < editable_positions[b];
    });

    MutationSpace space;
    space.parental = std::move(parental);
    space.max_mutations = max_mutations;
    space.liabilities = std::move(liabilities);
    const int L = static_cast<int>(space.parental.size());
    int prev = -1;
    for (std::size_t idx : order) {
        int p = editable_positions[idx];
        if (p < 0 || p >= L)
            throw ConfigError("editable position " + std::to_string(p) + " out of range");
        if (p == prev) throw ConfigError("duplicate editable position " + std::to_string(p));
        prev = p;

        std::string letters = allowed[idx];
        std::sort(letters.begin(), letters.end());
        letters.erase(std::unique(letters.begin(), letters.end()), letters.end());
        if (letters.empty()) throw ConfigError("empty allowed set at position " + std::to_string(p));
        for (char c : letters)
            if (!is_canonical(c))
                throw ConfigError("non-canonical letter in allowed set at position " + std::to_string(p));
        if (letters.find(space.parental[p]) == std::string::npos)
            throw ConfigError("allowed set at position " + std::to_string(p) +
                              " does not contain the parental letter");

        std::string alts;
        for (char c : letters)
            if (c != space.parental[p]) alts.push_back(c);
        space.editable_positions.push_back(p);
        space.allowed.push_back(std::move(letters));
        space.alternatives_.push_back(std::move(alts));
    }
    return space;
}

namespace {

double count_within(const MutationSpace& space, int m, double cap) {
    // coefficient DP over Prod_i (1 + d_i * x), truncated at degree m
    std::vector<double> coeff(static_cast<std::size_t>(m) + 1, 0.0);
    coeff[0] = 1.0;
    for (std::size_t i = 0; i < space.editable_positions.size(); ++i) {
        const double d = static_cast<double>(space.alternatives(i).size());
        if (d == 0) continue;
        for (int j = m; j >= 1; --j) coeff[j] += coeff[j - 1] * d;
    }
    double total = 0;
    for (double c : coeff) {
        total += c;
        if (total >= cap) return cap;
    }
    return total;
}

}  // namespace

double MutationSpace::count_upper_bound(double cap) const {
    return count_within(*this, max_mutations, cap);
}

int mutation_count(const Sequence& s, const MutationSpace& space) {
    if (s.size() != space.parental.size())
        throw LengthMismatch("sequence length does not match parental");
    int count = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] != space.parental[i]) ++count;
    return count;
}

namespace {

std::vector<int> mutated_positions(const std::string& s, const MutationSpace& space) {
    std::vector<int> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] != space.parental[i]) out.push_back(static_cast<int>(i));
    return out;
}

// Repairs by reverting mutated positions to the parental letter: first the
// mutation budget, then liability motifs (reverting a mutated position inside
// the offending span). Returns false when a motif contains no mutated
// position, i.e. the violation cannot be removed by reversion.
bool repair_in_place(std::string& s, const MutationSpace& space, Rng& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto mut = mutated_positions(s, space);
        if (static_cast<int>(mut.size()) > space.max_mutations) {
            std::uniform_int_distribution<std::size_t> pick(0, mut.size() - 1);
            int p = mut[pick(rng)];
            s[p] = space.parental[p];
            continue;
        }

        const LiabilityPattern* violated = nullptr;
        std::size_t vpos = 0;
        for (const auto& motif : space.liabilities.forbidden_motifs) {
            for (std::size_t pos = 0; pos + motif.length() <= s.size(); ++pos)
                if (motif.matches_at(s, pos)) {
                    violated = &motif;
                    vpos = pos;
                    break;
                }
            if (violated) break;
        }
        if (!violated) return true;

        std::vector<int> span_muts;
        for (int p : mut)
            if (p >= static_cast<int>(vpos) && p < static_cast<int>(vpos + violated->length()))
                span_muts.push_back(p);
        if (span_muts.empty()) return false;
        std::uniform_int_distribution<std::size_t> pick(0, span_muts.size() - 1);
        int p = span_muts[pick(rng)];
        s[p] = space.parental[p];
    }
    return false;
}

}  // namespace

Sequence mutate(const Sequence& s, const MutationSpace& space, double per_position_prob, Rng& rng) {
    if (s.size() != space.parental.size())
        throw LengthMismatch("sequence length does not match parental");
    std::string out = s.str();
    std::bernoulli_distribution flip(per_position_prob);
    for (std::size_t i = 0; i < space.editable_positions.size(); ++i) {
        if (per_position_prob <= 0.0 || !flip(rng)) continue;
        const int p = space.editable_positions[i];
        // choices are the allowed letters minus the current one
        std::string choices;
        for (char c : space.allowed[i])
            if (c != out[p]) choices.push_back(c);
        if (choices.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
        out[p] = choices[pick(rng)];
    }
    if (!repair_in_place(out, space, rng))
        throw RepairFailure("no valid repair found for mutated sequence");
    return Sequence::unchecked(std::move(out));
}

std::pair<Sequence, Sequence> single_point_crossover(const Sequence& a, const Sequence& b,
                                                     const MutationSpace& space, Rng& rng) {
    if (a.size() != b.size() || a.size() != space.parental.size())
        throw LengthMismatch("crossover parents must match the parental length");
    const std::size_t L = a.size();
    if (L < 2) return {a, b};
    std::uniform_int_distribution<std::size_t> cut_dist(1, L - 1);
    const std::size_t c = cut_dist(rng);
    std::string child1 = a.str().substr(0, c) + b.str().substr(c);
    std::string child2 = b.str().substr(0, c) + a.str().substr(c);
    if (!repair_in_place(child1, space, rng) || !repair_in_place(child2, space, rng))
        throw RepairFailure("no valid repair found for crossover child");
    return {Sequence::unchecked(std::move(child1)), Sequence::unchecked(std::move(child2))};
}

std::vector<Sequence> sample_initial(const MutationSpace& space, int n, int init_max_mut, Rng& rng) {
    if (n < 1) throw ConfigError("initial sample count must be >= 1");
    if (init_max_mut < 1) throw ConfigError("init_max_mut must be >= 1");
    init_max_mut = std::min(init_max_mut, space.max_mutations);
    if (count_within(space, init_max_mut, 1e18) < static_cast<double>(n))
        throw SpaceTooSmall("mutation space holds fewer than " + std::to_string(n) + " sequences");

    std::vector<std::size_t> mutable_slots;
    for (std::size_t i = 0; i < space.editable_positions.size(); ++i)
        if (!space.alternatives(i).empty()) mutable_slots.push_back(i);

    std::vector<Sequence> out;
    std::unordered_set<std::string> seen;
    out.push_back(space.parental);
    seen.insert(space.parental.str());

    const long attempts_cap = 2000L * n + 10000;
    long attempts = 0;
    std::uniform_int_distribution<int> count_dist(1, init_max_mut);
    while (static_cast<int>(out.size()) < n) {
        if (++attempts > attempts_cap)
            throw SpaceTooSmall("could not sample " + std::to_string(n) +
                                " distinct liability-clean sequences");
        const int j = std::min(count_dist(rng), static_cast<int>(mutable_slots.size()));
        if (j == 0) throw SpaceTooSmall("no mutable positions");
        // sample j distinct slots
        std::vector<std::size_t> slots = mutable_slots;
        for (int t = 0; t < j; ++t) {
            std::uniform_int_distribution<std::size_t> pick(t, slots.size() - 1);
            std::swap(slots[t], slots[pick(rng)]);
        }
        std::string s = space.parental.str();
        for (int t = 0; t < j; ++t) {
            const std::size_t slot = slots[t];
            const std::string& alts = space.alternatives(slot);
            std::uniform_int_distribution<std::size_t> pick(0, alts.size() - 1);
            s[space.editable_positions[slot]] = alts[pick(rng)];
        }
        if (seen.count(s)) continue;
        Sequence cand = Sequence::unchecked(s);
        if (!liability_check(cand, space.liabilities).empty()) continue;
        seen.insert(s);
        out.push_back(std::move(cand));
    }
    return out;
}

void for_each_in_space(const MutationSpace& space, const std::function<bool(const Sequence&)>& visit,
                       double cap) {
    if (space.count_upper_bound(cap + 1) > cap)
        throw SpaceTooLarge("mutation space exceeds the enumeration cap");

    std::vector<std::size_t> mutable_slots;
    for (std::size_t i = 0; i < space.editable_positions.size(); ++i)
        if (!space.alternatives(i).empty()) mutable_slots.push_back(i);
    const int k = static_cast<int>(mutable_slots.size());

    auto emit = [&](const std::string& s) {
        Sequence seq = Sequence::unchecked(s);
        if (!liability_check(seq, space.liabilities).empty()) return true;
        return visit(seq);
    };

    if (!emit(space.parental.str())) return;

    for (int j = 1; j <= std::min(space.max_mutations, k); ++j) {
        // lexicographic combinations of j slots out of k
        std::vector<int> comb(j);
        for (int i = 0; i < j; ++i) comb[i] = i;
        while (true) {
            // odometer over the alternative letters of the chosen slots
            std::vector<std::size_t> digit(j, 0);
            while (true) {
                std::string s = space.parental.str();
                for (int i = 0; i < j; ++i) {
                    const std::size_t slot = mutable_slots[comb[i]];
                    s[space.editable_positions[slot]] = space.alternatives(slot)[digit[i]];
                }
                if (!emit(s)) return;
                int i = j - 1;
                while (i >= 0) {
                    if (++digit[i] < space.alternatives(mutable_slots[comb[i]]).size()) break;
                    digit[i] = 0;
                    --i;
                }
                if (i < 0) break;
            }
            // next combination
            int i = j - 1;
            while (i >= 0 && comb[i] == k - j + i) --i;
            if (i < 0) break;
            ++comb[i];
            for (int t = i + 1; t < j; ++t) comb[t] = comb[t - 1] + 1;
        }
    }
}

std::vector<Sequence> enumerate_space(const MutationSpace& space, double cap) {
    std::vector<Sequence> out;
    for_each_in_space(space, [&](const Sequence& s) {
        out.push_back(s);
        return true;
    }, cap);
    return out;
}

MutationSpace MutationSpace::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mutation space file: " + path);

    std::string parental_text;
    int max_mut = -1;
    std::vector<int> positions;
    std::vector<std::string> allowed;
    std::vector<std::string> motifs;
    bool no_liabilities = false;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        auto fail = [&](const std::string& msg) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + msg);
        };
        if (key == "parental") {
            if (!(ls >> parental_text)) fail("expected: parental <sequence>");
        } else if (key == "max_mutations") {
            if (!(ls >> max_mut)) fail("expected: max_mutations <int>");
        } else if (key == "position") {
            int p;
            std::string letters;
            if (!(ls >> p >> letters)) fail("expected: position <index> <letters>");
            positions.push_back(p);
            allowed.push_back(letters);
        } else if (key == "liability") {
            std::string motif;
            if (!(ls >> motif)) fail("expected: liability <pattern>|none");
            if (motif == "none")
                no_liabilities = true;
            else
                motifs.push_back(motif);
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (parental_text.empty()) throw ConfigError(path + ": missing parental sequence");
    if (max_mut < 1) throw ConfigError(path + ": missing or invalid max_mutations");

    LiabilityRules rules;
    if (no_liabilities) {
        if (!motifs.empty()) throw ConfigError(path + ": 'liability none' conflicts with motif lines");
        rules = LiabilityRules::none();
    } else if (motifs.empty()) {
        rules = LiabilityRules::default_rules();
    } else {
        for (const auto& m : motifs) rules.forbidden_motifs.emplace_back(m);
    }

    Sequence parental = Sequence::validate(parental_text, parental_text.size());
    return MutationSpace::create(std::move(parental), std::move(positions), std::move(allowed),
                                 max_mut, std::move(rules));
}

std::string MutationSpace::to_text() const {
    std::ostringstream out;
    out << "parental " << parental.str() << "\n";
    out << "max_mutations " << max_mutations << "\n";
    for (std::size_t i = 0; i < editable_positions.size(); ++i)
        out << "position " << editable_positions[i] << " " << allowed[i] << "\n";
    if (liabilities.forbidden_motifs.empty())
        out << "liability none\n";
    else
        for (const auto& m : liabilities.forbidden_motifs) out << "liability " << m.text() << "\n";
    return out.str();
}

}  // namespace boat
