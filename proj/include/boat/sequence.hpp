// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boat/common.hpp"

namespace boat {

// The 20 canonical amino acids, alphabetical.
inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";

bool is_canonical(char c);
int residue_index(char c);  // index into kAminoAcids, -1 if non-canonical

/// A fixed-length string over the canonical amino-acid alphabet.
class Sequence {
public:
    Sequence() = default;
    static Sequence validate(const std::string& text, std::size_t length);
    // Caller guarantees validity; used on hot paths by the variation operators.
    static Sequence unchecked(std::string text) { return Sequence(std::move(text)); }

    const std::string& str() const { return residues_; }
    std::size_t size() const { return residues_.size(); }
    char operator[](std::size_t i) const { return residues_[i]; }

    friend bool operator==(const Sequence& a, const Sequence& b) { return a.residues_ == b.residues_; }
    friend bool operator<(const Sequence& a, const Sequence& b) { return a.residues_ < b.residues_; }

private:
    explicit Sequence(std::string s) : residues_(std::move(s)) {}
    std::string residues_;
};

/// One forbidden motif. Pattern syntax: a literal amino acid, `x` (any),
/// a class `[ST]`, or a negated class `[^P]`.
class LiabilityPattern {
public:
    explicit LiabilityPattern(const std::string& pattern);

    const std::string& text() const { return text_; }
    std::size_t length() const { return masks_.size(); }
    bool matches_at(const std::string& s, std::size_t pos) const;

private:
    std::string text_;
    std::vector<std::uint32_t> masks_;  // bit per canonical residue
};

struct LiabilityRules {
    std::vector<LiabilityPattern> forbidden_motifs;

    static LiabilityRules none() { return {}; }
    // N-glycosylation sequon N-x-[ST] with x != P.
    static LiabilityRules default_rules();
};

struct LiabilityViolation {
    int position;
    std::string motif;
};

/// The constrained edit space around a parental sequence.
struct MutationSpace {
    Sequence parental;
    std::vector<int> editable_positions;     // ascending, unique
    std::vector<std::string> allowed;        // per editable position, sorted, includes parental letter
    int max_mutations = 0;
    LiabilityRules liabilities;

    static MutationSpace create(Sequence parental,
                                std::vector<int> editable_positions,
                                std::vector<std::string> allowed,
                                int max_mutations,
                                LiabilityRules liabilities = LiabilityRules::default_rules());

    std::size_t length() const { return parental.size(); }
    // Non-parental letters at editable slot i.
    const std::string& alternatives(std::size_t i) const { return alternatives_[i]; }

    // Number of sequences within max_mutations of the parental, ignoring
    // liability filtering. Saturates at `cap`.
    double count_upper_bound(double cap = 1e18) const;

    // Load from the structured text format documented in the CLI module.
    static MutationSpace load(const std::string& path);
    std::string to_text() const;

private:
    std::vector<std::string> alternatives_;
};

Sequence validate_sequence(const std::string& text, std::size_t length);
int mutation_count(const Sequence& s, const MutationSpace& space);
std::vector<LiabilityViolation> liability_check(const Sequence& s, const LiabilityRules& rules);

Sequence mutate(const Sequence& s, const MutationSpace& space, double per_position_prob, Rng& rng);
std::pair<Sequence, Sequence> single_point_crossover(const Sequence& a, const Sequence& b,
                                                     const MutationSpace& space, Rng& rng);

std::vector<Sequence> sample_initial(const MutationSpace& space, int n, int init_max_mut, Rng& rng);

// Visits every liability-clean sequence within max_mutations of the parental,
// each exactly once, in a deterministic order (mutation count ascending,
// position subsets lexicographic, letters alphabetical). Stops early if the
// visitor returns false.
void for_each_in_space(const MutationSpace& space, const std::function<bool(const Sequence&)>& visit,
                       double cap = 1e8);
std::vector<Sequence> enumerate_space(const MutationSpace& space, double cap = 1e8);

}  // namespace boat

template <>
struct std::hash<boat::Sequence> {
    std::size_t operator()(const boat::Sequence& s) const noexcept {
        return std::hash<std::string>{}(s.str());
    }
};
