// SPDX-License-Identifier: Apache-2.0
#include "boat/encoding.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace boat {

namespace {

// NCBI BLOSUM45, canonical 20 residues, row/column order ARNDCQEGHILKMFPSTWYV.
constexpr const char* kBlosumOrder = "ARNDCQEGHILKMFPSTWYV";
constexpr int kBlosum45[20][20] = {
    { 5, -2, -1, -2, -1, -1, -1,  0, -2, -1, -1, -1, -1, -2, -1,  1,  0, -2, -2,  0},
    {-2,  7,  0, -1, -3,  1,  0, -2,  0, -3, -2,  3, -1, -2, -2, -1, -1, -2, -1, -2},
    {-1,  0,  6,  2, -2,  0,  0,  0,  1, -2, -3,  0, -2, -2, -2,  1,  0, -4, -2, -3},
    {-2, -1,  2,  7, -3,  0,  2, -1,  0, -4, -3,  0, -3, -4, -1,  0, -1, -4, -2, -3},
    {-1, -3, -2, -3, 12, -3, -3, -3, -3, -3, -2, -3, -2, -2, -4, -1, -1, -5, -3, -1},
    {-1,  1,  0,  0, -3,  6,  2, -2,  1, -2, -2,  1,  0, -4, -1,  0, -1, -2, -1, -3},
    {-1,  0,  0,  2, -3,  2,  6, -2,  0, -3, -2,  1, -2, -3,  0,  0, -1, -3, -2, -3},
    { 0, -2,  0, -1, -3, -2, -2,  7, -2, -4, -3, -2, -2, -3, -2,  0, -2, -2, -3, -3},
    {-2,  0,  1,  0, -3,  1,  0, -2, 10, -3, -2, -1,  0, -2, -2, -1, -2, -3,  2, -3},
    {-1, -3, -2, -4, -3, -2, -3, -4, -3,  5,  2, -3,  2,  0, -2, -2, -1, -2,  0,  3},
    {-1, -2, -3, -3, -2, -2, -2, -3, -2,  2,  5, -3,  2,  1, -3, -3, -1, -2,  0,  1},
    {-1,  3,  0,  0, -3,  1,  1, -2, -1, -3, -3,  5, -1, -3, -1, -1, -1, -2, -1, -2},
    {-1, -1, -2, -3, -2,  0, -2, -2,  0,  2,  2, -1,  6,  0, -2, -2, -1, -2,  0,  1},
    {-2, -2, -2, -4, -2, -4, -3, -3, -2,  0,  1, -3,  0,  8, -3, -2, -1,  1,  3,  0},
    {-1, -2, -2, -1, -4, -1,  0, -2, -2, -2, -3, -1, -2, -3,  9, -1, -1, -3, -3, -3},
    { 1, -1,  1,  0, -1,  0,  0,  0, -1, -2, -3, -1, -2, -2, -1,  4,  2, -4, -2, -1},
    { 0, -1,  0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -1, -1,  2,  5, -3, -1,  0},
    {-2, -2, -4, -4, -5, -2, -3, -2, -3, -2, -2, -2, -2,  1, -3, -4, -3, 15,  3, -3},
    {-2, -1, -2, -2, -3, -1, -2, -3,  2,  0,  0, -1,  0,  3, -3, -2, -1,  3,  8, -1},
    { 0, -2, -3, -3, -1, -3, -3, -3, -3,  3,  1, -2,  1,  0, -3, -1,  0, -3, -1,  5},
};

}  // namespace

const Eigen::Matrix<double, 20, 20>& blosum45_matrix() {
    static const Eigen::Matrix<double, 20, 20> m = [] {
        Eigen::Matrix<double, 20, 20> out;
        double sum = 0.0;
        for (int i = 0; i < 20; ++i) {
            const int ri = residue_index(kBlosumOrder[i]);
            for (int j = 0; j < 20; ++j) {
                const int rj = residue_index(kBlosumOrder[j]);
                out(ri, rj) = static_cast<double>(kBlosum45[i][j]);
                sum += kBlosum45[i][j];
            }
        }
        // checked constant: symmetry plus a few spot entries from the table
        if (!out.isApprox(out.transpose(), 0.0))
            throw BoatError("BLOSUM45 constant is not symmetric");
        auto at = [&](char a, char b) { return out(residue_index(a), residue_index(b)); };
        if (at('C', 'C') != 12 || at('W', 'W') != 15 || at('A', 'A') != 5 ||
            at('R', 'K') != 3 || at('N', 'D') != 2 || sum != -367.0)
            throw BoatError("BLOSUM45 constant failed its load-time checks");
        return out;
    }();
    return m;
}

Embedding OneHotEncoder::encode(const Sequence& s) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(20 * static_cast<Eigen::Index>(s.size()));
    for (std::size_t p = 0; p < s.size(); ++p)
        v[20 * static_cast<Eigen::Index>(p) + residue_index(s[p])] = 1.0;
    return {std::move(v), id()};
}

BlosumEmbeddingTable BlosumEmbeddingTable::build(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != 20 || matrix.cols() != 20)
        throw ConfigError("substitution matrix must be 20x20");
    if (!matrix.isApprox(matrix.transpose(), 1e-12))
        throw ConfigError("substitution matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix);
    if (es.info() != Eigen::Success)
        throw DecompositionFailure("eigendecomposition of the substitution matrix failed");
    const Eigen::VectorXd scale = es.eigenvalues().cwiseAbs().cwiseSqrt();
    BlosumEmbeddingTable table;
    table.vectors_ = es.eigenvectors() * scale.asDiagonal();
    return table;
}

const BlosumEmbeddingTable& BlosumEmbeddingTable::blosum45() {
    static const BlosumEmbeddingTable table = build(blosum45_matrix());
    return table;
}

Embedding BlosumEncoder::encode(const Sequence& s) const {
    Eigen::VectorXd v(20 * static_cast<Eigen::Index>(s.size()));
    for (std::size_t p = 0; p < s.size(); ++p)
        v.segment<20>(20 * static_cast<Eigen::Index>(p)) = table_.row(s[p]).transpose();
    return {std::move(v), id()};
}

BagEncoder BagEncoder::build(const std::vector<Sequence>& corpus, int n) {
    if (n < 1) throw ConfigError("n-gram length must be >= 1");
    BagEncoder enc;
    enc.n_ = n;
    std::map<std::string, int> sorted;  // deterministic vocabulary order
    for (const auto& s : corpus) {
        if (s.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= s.size(); ++i) sorted.emplace(s.str().substr(i, n), 0);
    }
    int idx = 0;
    for (auto& [gram, _] : sorted) enc.vocab_.emplace(gram, idx++);
    return enc;
}

Embedding BagEncoder::encode(const Sequence& s) const {
    if (s.size() < static_cast<std::size_t>(n_))
        throw SequenceTooShort("sequence shorter than the n-gram length");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim());
    const Eigen::Index overflow = dim() - 1;
    for (std::size_t i = 0; i + n_ <= s.size(); ++i) {
        auto it = vocab_.find(s.str().substr(i, n_));
        v[it == vocab_.end() ? overflow : it->second] += 1.0;
    }
    return {std::move(v), id()};
}

ExternalTableEncoder ExternalTableEncoder::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open embedding file: " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("dim=", 0) != 0)
        throw ConfigError(path + ": expected header line dim=<D>");
    const Eigen::Index dim = std::stol(header.substr(4));
    if (dim < 1) throw ConfigError(path + ": invalid embedding dimension");

    ExternalTableEncoder enc;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": missing tab separator");
        Eigen::VectorXd v(dim);
        std::istringstream vs(line.substr(tab + 1));
        for (Eigen::Index i = 0; i < dim; ++i)
            if (!(vs >> v[i]))
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(dim) + " values");
        enc.table_[line.substr(0, tab)] = std::move(v);
    }
    return enc;
}

Embedding ExternalTableEncoder::encode(const Sequence& s) const {
    auto it = table_.find(s.str());
    if (it == table_.end())
        throw BoatError("no precomputed embedding for sequence " + s.str());
    return {it->second, id()};
}

double tanimoto(const Embedding& x, const Embedding& y) {
    if (x.encoder_id != y.encoder_id)
        throw DimensionMismatch("tanimoto over different encoders: " + x.encoder_id + " vs " +
                                y.encoder_id);
    if (x.values.size() != y.values.size())
        throw DimensionMismatch("tanimoto over different dimensions");
    const double dot = x.values.dot(y.values);
    const double denom = x.values.squaredNorm() + y.values.squaredNorm() - dot;
    if (denom == 0.0) {
        if (x.values.squaredNorm() == 0.0 && y.values.squaredNorm() == 0.0)
            throw ZeroVectors("tanimoto of two zero vectors");
        return 1.0;  // x == y, nonzero
    }
    return dot / denom;
}

namespace {

Eigen::MatrixXd stack(const std::vector<Embedding>& xs) {
    if (xs.empty()) return {};
    Eigen::MatrixXd X(static_cast<Eigen::Index>(xs.size()), xs[0].values.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i].values.size() != X.cols() || xs[i].encoder_id != xs[0].encoder_id)
            throw DimensionMismatch("inconsistent embeddings in tanimoto gram");
        X.row(static_cast<Eigen::Index>(i)) = xs[i].values.transpose();
    }
    return X;
}

}  // namespace

Eigen::MatrixXd tanimoto_gram(const std::vector<Embedding>& xs) {
    const Eigen::MatrixXd X = stack(xs);
    const Eigen::MatrixXd G = X * X.transpose();
    const Eigen::VectorXd sq = G.diagonal();
    Eigen::MatrixXd T(G.rows(), G.cols());
    for (Eigen::Index i = 0; i < G.rows(); ++i)
        for (Eigen::Index j = 0; j < G.cols(); ++j) {
            const double denom = sq[i] + sq[j] - G(i, j);
            T(i, j) = denom == 0.0 ? 1.0 : G(i, j) / denom;
        }
    return T;
}

Eigen::MatrixXd tanimoto_cross(const std::vector<Embedding>& a, const std::vector<Embedding>& b) {
    const Eigen::MatrixXd A = stack(a);
    const Eigen::MatrixXd B = stack(b);
    if (a.empty() || b.empty()) return Eigen::MatrixXd(a.size(), b.size());
    const Eigen::MatrixXd G = A * B.transpose();
    const Eigen::VectorXd sa = A.rowwise().squaredNorm();
    const Eigen::VectorXd sb = B.rowwise().squaredNorm();
    Eigen::MatrixXd T(G.rows(), G.cols());
    for (Eigen::Index i = 0; i < G.rows(); ++i)
        for (Eigen::Index j = 0; j < G.cols(); ++j) {
            const double denom = sa[i] + sb[j] - G(i, j);
            T(i, j) = denom == 0.0 ? 1.0 : G(i, j) / denom;
        }
    return T;
}

std::unique_ptr<Encoder> make_encoder(const std::string& name, const MutationSpace& space,
                                      const std::string& external_file) {
    if (name == "onehot") return std::make_unique<OneHotEncoder>();
    if (name == "blosum") return std::make_unique<BlosumEncoder>();
    if (name == "bag") {
        // vocabulary from the parental single-mutant neighborhood; everything
        // further away falls into the overflow bucket
        std::vector<Sequence> corpus{space.parental};
        for (std::size_t i = 0; i < space.editable_positions.size(); ++i)
            for (char c : space.alternatives(i)) {
                std::string s = space.parental.str();
                s[space.editable_positions[i]] = c;
                corpus.push_back(Sequence::unchecked(std::move(s)));
            }
        return std::make_unique<BagEncoder>(BagEncoder::build(corpus, 5));
    }
    if (name == "external-file") {
        if (external_file.empty())
            throw ConfigError("encoder 'external-file' requires an embedding file");
        return std::make_unique<ExternalTableEncoder>(ExternalTableEncoder::load(external_file));
    }
    throw ConfigError("unknown encoder '" + name + "'");
}

}  // namespace boat
