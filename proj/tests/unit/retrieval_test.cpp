#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ranking.hpp"
#include "scenario.hpp"
#include "synthetic.hpp"
#include "swtrain/error.hpp"
#include "swtrain/gateway.hpp"
#include "swtrain/mock_provider.hpp"
#include "swtrain/random.hpp"
#include "swtrain/retrieval.hpp"

using namespace swtrain;
using namespace swtrain::retrieval;

namespace {

const std::vector<std::string> kDocs = {
    "I feel tired of the job and the rent",
    "The rent is due and money is short",
    "My family says I should talk to someone",
    "money money money",
};

}  // namespace

TEST(Bm25, StatisticsOfASmallCorpus) {
  auto idx = SparseIndex::build(kDocs);
  EXPECT_EQ(idx.doc_count(), 4u);
  EXPECT_EQ(idx.doc_length(0), 9u);
  EXPECT_EQ(idx.doc_length(3), 3u);
  EXPECT_DOUBLE_EQ(idx.average_length(), (9.0 + 8 + 8 + 3) / 4);
  EXPECT_EQ(idx.document_frequency("rent"), 2u);
  EXPECT_EQ(idx.document_frequency("absent"), 0u);
  EXPECT_EQ(idx.term_frequency(3, "money"), 3u);
  EXPECT_DOUBLE_EQ(idx.idf("rent"), std::log(1.0 + (4 - 2 + 0.5) / (2 + 0.5)));
}

TEST(Bm25, ScoresMatchOracle) {
  auto idx = SparseIndex::build(kDocs);
  for (std::string q : {"rent money", "money", "family talk", "nothing here", "rent rent"}) {
    auto got = idx.score_all(q);
    auto want = oracle::bm25_scores(kDocs, q);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << q << " doc " << i;
  }
}

TEST(Bm25, RepeatedQueryTokensCountEachTime) {
  auto idx = SparseIndex::build(kDocs);
  auto once = idx.score_all("rent");
  auto twice = idx.score_all("rent rent");
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(twice[i], 2 * once[i], 1e-12);
}

TEST(Bm25, ParametersChangeScores) {
  auto a = SparseIndex::build(kDocs, {1.2, 0.75});
  auto b = SparseIndex::build(kDocs, {2.0, 0.0});
  auto want = oracle::bm25_scores(kDocs, "money rent", 2.0, 0.0);
  auto got = b.score_all("money rent");
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  EXPECT_NE(a.score_all("money rent"), got);
}

TEST(Bm25, TopKClampsAndBreaksTiesByOrdinal) {
  auto idx = SparseIndex::build(kDocs);
  auto all = idx.retrieve_topk("unrelated words", 8);
  ASSERT_EQ(all.size(), 4u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].ordinal, i);
    EXPECT_EQ(all[i].score, 0.0);
  }
  auto top = idx.retrieve_topk("money", 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].ordinal, 3u);
  EXPECT_THROW(idx.retrieve_topk("money", 0), Error);
}

TEST(Bm25, EmptyPoolIsRejected) {
  try {
    SparseIndex::build(std::vector<std::string>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyPool);
  }
}

TEST(Bm25, RebuildAndSnapshotAreIdentical) {
  auto a = SparseIndex::build(kDocs);
  auto b = SparseIndex::build(kDocs);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.serialize(), b.serialize());
  auto c = SparseIndex::deserialize(a.serialize());
  EXPECT_EQ(a, c);
  EXPECT_EQ(a.score_all("rent money family"), c.score_all("rent money family"));
  EXPECT_THROW(SparseIndex::deserialize("{\"format\":\"other\"}"), Error);
}

TEST(Bm25, RandomCorporaRankLikeTheOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto corpus = synthetic::random_corpus(rng.next(), 1 + rng.uniform_index(6), 8);
    auto pool = DemonstrationPool::from_corpus(corpus);
    auto idx = SparseIndex::build(pool);
    auto texts = pool.index_texts();
    auto query = pair_text(corpus.turns[0].client_text, "talk about money plan");
    std::string why;
    EXPECT_TRUE(ranking::matches_oracle(idx.retrieve_topk(query, 8), oracle::bm25_scores(texts, query), 8, 1e-9, &why))
        << why;
  }
}

// Duplicating the best match raises its df, which lowers every score of its
// terms uniformly; the original must still rank no lower than second.
TEST(Bm25, DuplicatingTheTopDocumentKeepsItNearTheTop) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto corpus = synthetic::random_corpus(rng.next(), 1 + rng.uniform_index(4), 8);
    auto texts = DemonstrationPool::from_corpus(corpus).index_texts();
    std::string query = texts[rng.uniform_index(texts.size())];
    auto before = SparseIndex::build(texts).retrieve_topk(query, 1);
    if (before[0].score <= 0.0) continue;
    auto top = before[0].ordinal;
    texts.push_back(texts[top]);
    auto after = SparseIndex::build(texts).retrieve_topk(query, 2);
    bool near_top = after[0].ordinal == top || (after.size() > 1 && after[1].ordinal == top);
    EXPECT_TRUE(near_top) << "trial " << trial;
  }
}

TEST(Dense, CosineTopKMatchesOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + rng.uniform_index(30), dim = 1 + rng.uniform_index(12);
    std::vector<std::vector<double>> raw(n, std::vector<double>(dim));
    for (auto& v : raw) {
      for (auto& x : v) x = rng.normal();
      v[0] += 1e-3;
    }
    std::vector<double> q(dim);
    for (auto& x : q) x = rng.normal();
    auto idx = EmbeddingIndex::from_vectors(raw, "toy");
    std::vector<double> want(n);
    for (std::size_t i = 0; i < n; ++i) want[i] = oracle::cosine(q, raw[i]);
    std::string why;
    EXPECT_TRUE(ranking::matches_oracle(idx.topk_by_vector(q, 8), want, 8, 1e-9, &why)) << why;
  }
}

TEST(Dense, ValidationAndEdgeCases) {
  auto idx = EmbeddingIndex::from_vectors({{3, 4}, {0, 2}}, "m");
  EXPECT_EQ(idx.dimension(), 2u);
  EXPECT_NEAR(idx.vector(0)[0], 0.6, 1e-12);
  EXPECT_EQ(idx.similarities(std::vector<double>{0, 0}), (std::vector<double>{0, 0}));
  try {
    idx.similarities(std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
  EXPECT_THROW(EmbeddingIndex::from_vectors({{1, 0}, {1, 0, 0}}, "m"), Error);
  EXPECT_THROW(EmbeddingIndex::from_vectors({}, "m"), Error);
  auto back = EmbeddingIndex::deserialize(idx.serialize());
  EXPECT_EQ(back.model_id(), "m");
  EXPECT_EQ(back.vector(1), idx.vector(1));
}

TEST(Dense, BuildsThroughTheGatewayWithCachedEmbeddings) {
  auto mock = llm::MockProvider::from_json({{"strict", true}, {"rules", nlohmann::json::array()}});
  llm::Gateway g(scenario::provider_config(), mock, mock);
  auto corpus = synthetic::random_corpus(3, 2, 5);
  auto pool = DemonstrationPool::from_corpus(corpus);
  auto idx = EmbeddingIndex::build(pool, g);
  EXPECT_EQ(idx.size(), pool.size());
  EXPECT_EQ(idx.model_id(), "mock-embed");
  auto calls = mock->embed_calls();
  auto hits = idx.dense_topk(pool.index_text(0), 3, gateway_embedder(g));
  EXPECT_EQ(hits.at(0).ordinal, 0u);
  EXPECT_NEAR(hits.at(0).score, 1.0, 1e-12);
  EXPECT_EQ(mock->embed_calls(), calls);  // query text was already cached
}

TEST(Pool, PairTextJoinsClientAndWorker) {
  EXPECT_EQ(pair_text("c", "w"), "c\nw");
  auto corpus = synthetic::random_corpus(1, 1, 3);
  auto pool = DemonstrationPool::from_corpus(corpus);
  EXPECT_EQ(pool.size(), corpus.size());
  EXPECT_EQ(pool.index_text(0), corpus.turns[0].client_text + "\n" + corpus.turns[0].worker_text);
}
