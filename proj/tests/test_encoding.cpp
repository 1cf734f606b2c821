// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "boat/encoding.hpp"

using namespace boat;

namespace {

Sequence random_sequence(std::size_t L, std::mt19937_64& rng) {
    std::string s;
    for (std::size_t i = 0; i < L; ++i) s.push_back(kAminoAcids[rng() % 20]);
    return Sequence::validate(s, L);
}

}  // namespace

TEST_CASE("one-hot encoding structure") {
    OneHotEncoder enc;
    const Sequence s = Sequence::validate("ACY", 3);
    const Embedding e = enc.encode(s);
    CHECK(e.encoder_id == "onehot");
    REQUIRE(e.values.size() == 60);
    CHECK(e.values.sum() == doctest::Approx(3.0));
    CHECK(e.values.squaredNorm() == doctest::Approx(3.0));
    CHECK(e.values[0] == 1.0);        // A at position 0
    CHECK(e.values[20 + 1] == 1.0);   // C at position 1
    CHECK(e.values[40 + 19] == 1.0);  // Y at position 2
}

TEST_CASE("one-hot inner product counts matching positions") {
    OneHotEncoder enc;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t L = 4 + rng() % 12;
        const Sequence a = random_sequence(L, rng);
        const Sequence b = random_sequence(L, rng);
        int matches = 0;
        for (std::size_t i = 0; i < L; ++i)
            if (a[i] == b[i]) ++matches;
        CHECK(enc.encode(a).values.dot(enc.encode(b).values) ==
              doctest::Approx(static_cast<double>(matches)));
    }
}

TEST_CASE("tanimoto closed form on one-hot: (m)/(2L - m)") {
    OneHotEncoder enc;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t L = 3 + rng() % 15;
        const Sequence a = random_sequence(L, rng);
        const Sequence b = random_sequence(L, rng);
        int m = 0;
        for (std::size_t i = 0; i < L; ++i)
            if (a[i] == b[i]) ++m;
        const double expected = static_cast<double>(m) / (2.0 * L - m);
        CHECK(tanimoto(enc.encode(a), enc.encode(b)) == doctest::Approx(expected).epsilon(1e-12));
    }
    const Sequence s = random_sequence(8, rng);
    CHECK(tanimoto(enc.encode(s), enc.encode(s)) == doctest::Approx(1.0));
}

TEST_CASE("tanimoto error conditions") {
    OneHotEncoder onehot;
    BlosumEncoder blosum;
    const Sequence s = Sequence::validate("ACDE", 4);
    // mismatched encoders
    CHECK_THROWS_AS(tanimoto(onehot.encode(s), blosum.encode(s)), DimensionMismatch);
    // mismatched dimensions (different lengths)
    CHECK_THROWS_AS(
        tanimoto(onehot.encode(s), onehot.encode(Sequence::validate("ACD", 3))),
        DimensionMismatch);
    // zero vectors
    Embedding z1{Eigen::VectorXd::Zero(4), "onehot"};
    Embedding z2{Eigen::VectorXd::Zero(4), "onehot"};
    CHECK_THROWS_AS(tanimoto(z1, z2), ZeroVectors);
}

TEST_CASE("one-hot Tanimoto Gram matrix is positive semidefinite") {
    OneHotEncoder enc;
    std::mt19937_64 rng(42);
    std::vector<Embedding> xs;
    for (int i = 0; i < 40; ++i) xs.push_back(enc.encode(random_sequence(10, rng)));
    const Eigen::MatrixXd K = tanimoto_gram(xs);
    CHECK(K.rows() == 40);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    for (int i = 0; i < 40; ++i) CHECK(K(i, i) == doctest::Approx(1.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("tanimoto_cross agrees with pairwise tanimoto") {
    OneHotEncoder enc;
    std::mt19937_64 rng(3);
    std::vector<Embedding> a, b;
    for (int i = 0; i < 7; ++i) a.push_back(enc.encode(random_sequence(6, rng)));
    for (int i = 0; i < 5; ++i) b.push_back(enc.encode(random_sequence(6, rng)));
    const Eigen::MatrixXd C = tanimoto_cross(a, b);
    REQUIRE(C.rows() == 7);
    REQUIRE(C.cols() == 5);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(C(i, j) == doctest::Approx(tanimoto(a[i], b[j])).epsilon(1e-12));
}

TEST_CASE("blosum embedding table reproduces the substitution Gram") {
    const auto& table = BlosumEmbeddingTable::blosum45();
    const Eigen::Matrix<double, 20, 20> G = table.gram();
    const Eigen::Matrix<double, 20, 20>& B = blosum45_matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    const Eigen::MatrixXd expected =
        es.eigenvectors() * es.eigenvalues().cwiseAbs().asDiagonal() *
        es.eigenvectors().transpose();
    CHECK((G - expected).cwiseAbs().maxCoeff() < 1e-8);
    // |eigenvalue| construction: diagonal of |B| spectrum, so G has the same
    // eigenvalues as B in absolute value
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(G);
    Eigen::VectorXd want = es.eigenvalues().cwiseAbs();
    std::sort(want.data(), want.data() + 20);
    CHECK((eg.eigenvalues() - want).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("blosum45 spot values") {
    const auto& B = blosum45_matrix();
    auto at = [&](char a, char b) { return B(residue_index(a), residue_index(b)); };
    CHECK(at('C', 'C') == 12.0);
    CHECK(at('W', 'W') == 15.0);
    CHECK(at('A', 'A') == 5.0);
    CHECK(at('R', 'K') == 3.0);
    CHECK(at('N', 'D') == 2.0);
    CHECK((B - B.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("blosum encoding inner products decompose per position") {
    BlosumEncoder enc;
    const auto& table = BlosumEmbeddingTable::blosum45();
    const Eigen::Matrix<double, 20, 20> G = table.gram();
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t L = 3 + rng() % 8;
        const Sequence a = random_sequence(L, rng);
        const Sequence b = random_sequence(L, rng);
        double expected = 0.0;
        for (std::size_t p = 0; p < L; ++p)
            expected += G(residue_index(a[p]), residue_index(b[p]));
        CHECK(enc.encode(a).values.dot(enc.encode(b).values) ==
              doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("blosum table from a custom diagonal matrix") {
    // diag(4): every residue vector has squared norm 4, cross products 0,
    // so the Gram matrix is 4I
    const Eigen::MatrixXd D4 = 4.0 * Eigen::MatrixXd::Identity(20, 20);
    const auto table = BlosumEmbeddingTable::build(D4);
    const Eigen::Matrix<double, 20, 20> G = table.gram();
    CHECK((G - D4).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bag encoder counts n-grams") {
    const std::size_t L = 8;
    std::vector<Sequence> corpus = {Sequence::validate("AAACAAAC", L),
                                    Sequence::validate("CCCCAAAA", L)};
    const BagEncoder enc = BagEncoder::build(corpus, 3);
    const Sequence s = Sequence::validate("AAACAAAC", L);
    const Embedding e = enc.encode(s);
    // L - n + 1 overlapping n-grams in total
    CHECK(e.values.sum() == doctest::Approx(static_cast<double>(L - 3 + 1)));
    CHECK((e.values.array() >= 0.0).all());
    // a sequence made of unseen letters lands entirely in the overflow bucket
    const Embedding u = enc.encode(Sequence::validate("WWWWWWWW", L));
    CHECK(u.values.sum() == doctest::Approx(static_cast<double>(L - 3 + 1)));
    CHECK(u.values.maxCoeff() == doctest::Approx(static_cast<double>(L - 3 + 1)));
    // shorter than n
    CHECK_THROWS_AS(enc.encode(Sequence::validate("AA", 2)), SequenceTooShort);
}

TEST_CASE("external table encoder round-trip") {
    const std::string path = "test_external_embeddings.txt";
    {
        std::ofstream out(path);
        out << "dim=3\n";
        out << "ACD\t1 0 2\n";
        out << "CCD\t0.5 -1 0\n";
    }
    const ExternalTableEncoder enc = ExternalTableEncoder::load(path);
    const Embedding e = enc.encode(Sequence::validate("ACD", 3));
    REQUIRE(e.values.size() == 3);
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(0.0));
    CHECK(e.values[2] == doctest::Approx(2.0));
    CHECK(enc.encode(Sequence::validate("CCD", 3)).values[1] == doctest::Approx(-1.0));
    CHECK_THROWS_AS(enc.encode(Sequence::validate("DDD", 3)), BoatError);
    const Embedding a = enc.encode(Sequence::validate("ACD", 3));
    const Embedding b = enc.encode(Sequence::validate("CCD", 3));
    const double dot = 0.5;
    const double expected = dot / (5.0 + 1.25 - dot);
    CHECK(tanimoto(a, b) == doctest::Approx(expected));
}

TEST_CASE("external table encoder rejects malformed files") {
    {
        std::ofstream out("test_external_bad_header.txt");
        out << "dimension 3\nACD\t1 2 3\n";
    }
    CHECK_THROWS_AS(ExternalTableEncoder::load("test_external_bad_header.txt"), ConfigError);
    {
        std::ofstream out("test_external_bad_row.txt");
        out << "dim=3\nACD\t1 2\n";
    }
    CHECK_THROWS_AS(ExternalTableEncoder::load("test_external_bad_row.txt"), ConfigError);
    CHECK_THROWS_AS(ExternalTableEncoder::load("no_such_file.txt"), ConfigError);
}

TEST_CASE("make_encoder dispatch") {
    const MutationSpace space = MutationSpace::create(
        Sequence::validate("ACDEFG", 6), {0, 1}, {"AC", "CD"}, 2, LiabilityRules::none());
    CHECK(make_encoder("onehot", space)->id() == "onehot");
    CHECK(make_encoder("blosum", space)->id() == "blosum");
    CHECK(make_encoder("bag", space)->id() == "bag5");
    CHECK_THROWS_AS(make_encoder("wavelet", space), ConfigError);
}
