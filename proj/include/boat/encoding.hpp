// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "boat/common.hpp"
#include "boat/sequence.hpp"

namespace boat {

struct Embedding {
    Eigen::VectorXd values;
    std::string encoder_id;
};

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual Embedding encode(const Sequence& s) const = 0;
    virtual std::string id() const = 0;
};

/// Concatenation of per-residue one-hot vectors; dimension 20*L.
class OneHotEncoder final : public Encoder {
public:
    Embedding encode(const Sequence& s) const override;
    std::string id() const override { return "onehot"; }
};

// BLOSUM45 in the order of kAminoAcids (symmetric, integer-valued).
const Eigen::Matrix<double, 20, 20>& blosum45_matrix();

/// Per-residue embedding vectors U*|D|^{1/2} from the eigendecomposition
/// U D U^T of a symmetric substitution matrix. The Gram matrix of the 20
/// vectors equals U|D|U^T.
class BlosumEmbeddingTable {
public:
    static BlosumEmbeddingTable build(const Eigen::MatrixXd& matrix);
    static const BlosumEmbeddingTable& blosum45();

    Eigen::RowVector<double, 20> row(char residue) const {
        return vectors_.row(residue_index(residue));
    }
    Eigen::Matrix<double, 20, 20> gram() const { return vectors_ * vectors_.transpose(); }

private:
    Eigen::Matrix<double, 20, 20> vectors_;  // one row per residue
};

class BlosumEncoder final : public Encoder {
public:
    explicit BlosumEncoder(const BlosumEmbeddingTable& table = BlosumEmbeddingTable::blosum45())
        : table_(table) {}
    Embedding encode(const Sequence& s) const override;
    std::string id() const override { return "blosum"; }

private:
    BlosumEmbeddingTable table_;
};

/// Counts of overlapping n-grams (stride 1) over a vocabulary fixed at
/// construction; n-grams outside the vocabulary share an overflow bucket.
class BagEncoder final : public Encoder {
public:
    static BagEncoder build(const std::vector<Sequence>& corpus, int n = 5);
    Embedding encode(const Sequence& s) const override;
    std::string id() const override { return "bag" + std::to_string(n_); }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(vocab_.size()) + 1; }

private:
    int n_ = 5;
    std::unordered_map<std::string, int> vocab_;
};

/// Precomputed sequence -> vector table loaded from a file:
/// header `dim=<D>`, then `<sequence>\t<v1> <v2> ... <vD>` per row.
class ExternalTableEncoder final : public Encoder {
public:
    static ExternalTableEncoder load(const std::string& path);
    Embedding encode(const Sequence& s) const override;
    std::string id() const override { return "external"; }

private:
    std::unordered_map<std::string, Eigen::VectorXd> table_;
};

// <x,y> / (|x|^2 + |y|^2 - <x,y>)
double tanimoto(const Embedding& x, const Embedding& y);

Eigen::MatrixXd tanimoto_gram(const std::vector<Embedding>& xs);
Eigen::MatrixXd tanimoto_cross(const std::vector<Embedding>& a, const std::vector<Embedding>& b);

std::unique_ptr<Encoder> make_encoder(const std::string& name, const MutationSpace& space,
                                      const std::string& external_file = "");

}  // namespace boat
