#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "causal/model.hpp"
#include "causal/random.hpp"

using namespace causal;

namespace {

Vocabulary toy_vocab() {
  return Vocabulary::build({"alpha beta gamma delta epsilon zeta"});
}

void set_row(Matrix& table, std::size_t row, const std::vector<double>& v) {
  for (std::size_t k = 0; k < v.size(); ++k) table(row, k) = v[k];
}

void set_identity(Matrix& m) {
  for (double& v : m.values()) v = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) = 1.0;
}

CesarModel random_model(const Vocabulary& vocab, std::uint64_t seed,
                        EmbedderKind kind = EmbedderKind::lookup,
                        AttentionMode mode = AttentionMode::learned,
                        bool include_specials = true, std::size_t dim = 8) {
  ModelConfig cfg;
  cfg.dim = dim;
  cfg.embedder = kind;
  cfg.attention_mode = mode;
  cfg.include_specials = include_specials;
  cfg.seed = seed;
  return make_model(vocab, cfg);
}

} // namespace

TEST_CASE("lookup embedder returns the stored vector for a single token") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 1, EmbedderKind::lookup, AttentionMode::learned, false, 4);
  set_row(model.table, static_cast<std::size_t>(vocab.id_of("alpha")), {1.0, 2.0, 3.0, 4.0});

  TokenSequence seq;
  seq.ids = {kClsId, vocab.id_of("alpha"), kSepId, vocab.id_of("beta"), kSepId};
  seq.type_ids = {0, 0, 0, 1, 1};
  seq.attention_mask = {1, 1, 1, 1, 1};
  auto [cause, effect] = embed(model, seq);
  REQUIRE(cause.rows() == 1);
  CHECK(cause(0, 0) == 1.0);
  CHECK(cause(0, 1) == 2.0);
  CHECK(cause(0, 2) == 3.0);
  CHECK(cause(0, 3) == 4.0);
  REQUIRE(effect.rows() == 1);
}

TEST_CASE("embed drops [PAD] rows") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 2);
  TokenSequence seq;
  seq.ids = {kClsId, vocab.id_of("alpha"), kSepId, vocab.id_of("beta"), kSepId, kPadId, kPadId};
  seq.type_ids = {0, 0, 0, 1, 1, 1, 1};
  seq.attention_mask = {1, 1, 1, 1, 1, 0, 0};
  auto [cause, effect] = embed(model, seq);
  CHECK(cause.rows() == 3);
  CHECK(effect.rows() == 2);
}

TEST_CASE("include_specials=false strips [CLS] and [SEP] rows") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 3, EmbedderKind::lookup, AttentionMode::learned, false);
  TokenSequence seq;
  seq.ids = {kClsId, vocab.id_of("alpha"), vocab.id_of("gamma"), kSepId, vocab.id_of("beta"), kSepId};
  seq.type_ids = {0, 0, 0, 0, 1, 1};
  seq.attention_mask = {1, 1, 1, 1, 1, 1};
  auto [cause, effect] = embed(model, seq);
  CHECK(cause.rows() == 2);
  CHECK(effect.rows() == 1);
}

TEST_CASE("embed rejects out-of-range token ids") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 4);
  TokenSequence seq;
  seq.ids = {kClsId, static_cast<TokenId>(vocab.size() + 10), kSepId, 4, kSepId};
  seq.type_ids = {0, 0, 0, 1, 1};
  seq.attention_mask = {1, 1, 1, 1, 1};
  CHECK_THROWS_AS(embed(model, seq), ValidationError);
}

TEST_CASE("uniform attention spreads mass evenly") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 5, EmbedderKind::lookup, AttentionMode::uniform, true, 4);
  const Matrix a = attention(model, Matrix(2, 4, 0.5), Matrix(3, 4, 0.5));
  REQUIRE(a.rows() == 2);
  REQUIRE(a.cols() == 3);
  for (double v : a.values()) CHECK(v == Catch::Approx(1.0 / 6.0).margin(1e-15));
}

TEST_CASE("learned attention over a single pair is 1") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 6, EmbedderKind::lookup, AttentionMode::learned, true, 4);
  const Matrix a = attention(model, Matrix(1, 4, 0.3), Matrix(1, 4, -0.7));
  CHECK(a(0, 0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("learned attention with identity projections on a worked example") {
  // C = [(1,0),(0,1)], E = [(1,1)]: logits are (1,1), so attention is (1/2,1/2).
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 7, EmbedderKind::lookup, AttentionMode::learned, true, 2);
  set_identity(model.w_q);
  set_identity(model.w_k);
  const Matrix cause = Matrix::of({{1.0, 0.0}, {0.0, 1.0}});
  const Matrix effect = Matrix::of({{1.0, 1.0}});
  const Matrix a = attention(model, cause, effect);
  CHECK(a(0, 0) == Catch::Approx(0.5).margin(1e-12));
  CHECK(a(1, 0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("attention validates embedding width") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 8, EmbedderKind::lookup, AttentionMode::learned, true, 4);
  CHECK_THROWS_AS(attention(model, Matrix(2, 3, 0.1), Matrix(2, 4, 0.1)), ValidationError);
}

TEST_CASE("identical single-token embeddings score 1, orthogonal score 0") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 9, EmbedderKind::lookup, AttentionMode::learned, false, 2);
  const auto alpha = static_cast<std::size_t>(vocab.id_of("alpha"));
  const auto beta = static_cast<std::size_t>(vocab.id_of("beta"));
  set_row(model.table, alpha, {0.6, 0.8});
  set_row(model.table, beta, {0.6, 0.8});

  const auto breakdown =
      score(model, vocab, EventText("alpha"), std::nullopt, EventText("beta"));
  CHECK(breakdown.score == Catch::Approx(1.0).margin(1e-12));

  set_row(model.table, beta, {-0.8, 0.6});
  const auto orthogonal =
      score(model, vocab, EventText("alpha"), std::nullopt, EventText("beta"));
  CHECK(orthogonal.score == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("worked score example: two cause tokens against one effect token") {
  // M column is (1/sqrt(2), 1/sqrt(2)) and attention is (1/2, 1/2), so the
  // score is 1/sqrt(2). Oracle: direct evaluation of the defining sum.
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 10, EmbedderKind::lookup, AttentionMode::learned, true, 2);
  set_identity(model.w_q);
  set_identity(model.w_k);
  const Matrix cause = Matrix::of({{1.0, 0.0}, {0.0, 1.0}});
  const Matrix effect = Matrix::of({{1.0, 1.0}});
  const auto breakdown = score_embedded(model, cause, effect);

  double oracle = 0.0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 2; ++i) oracle += 0.5 * inv_sqrt2;
  CHECK(breakdown.association(0, 0) == Catch::Approx(inv_sqrt2).margin(1e-12));
  CHECK(breakdown.association(1, 0) == Catch::Approx(inv_sqrt2).margin(1e-12));
  CHECK(breakdown.score == Catch::Approx(oracle).margin(1e-12));
  CHECK(breakdown.score == Catch::Approx(0.70710678).margin(1e-8));
}

TEST_CASE("breakdown invariants hold on random models and inputs") {
  const auto vocab = toy_vocab();
  Rng rng(1234);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
  for (int trial = 0; trial < 60; ++trial) {
    const bool uniform = trial % 3 == 0;
    const bool specials = trial % 2 == 0;
    auto model = random_model(vocab, 100 + static_cast<std::uint64_t>(trial),
                              trial % 4 == 0 ? EmbedderKind::lookup_mixer : EmbedderKind::lookup,
                              uniform ? AttentionMode::uniform : AttentionMode::learned,
                              specials, 6);
    auto sentence = [&](std::size_t len) {
      std::string s = words[rng.next_index(words.size())];
      for (std::size_t i = 1; i < len; ++i) s += " " + words[rng.next_index(words.size())];
      return EventText(s);
    };
    std::optional<EventText> addition;
    if (trial % 2 == 1) addition = sentence(1 + rng.next_index(3));
    const auto b = score(model, vocab, sentence(1 + rng.next_index(4)), addition,
                         sentence(1 + rng.next_index(4)));

    CHECK(b.attention.sum() == Catch::Approx(1.0).margin(1e-9));
    CHECK(b.score >= 0.0);
    CHECK(b.score <= 1.0 + 1e-12);
    double recomputed = 0.0;
    for (std::size_t k = 0; k < b.strength.values().size(); ++k) {
      CHECK(std::fabs(b.strength.values()[k] -
                      b.association.values()[k] * b.attention.values()[k]) < 1e-12);
      recomputed += b.strength.values()[k];
    }
    CHECK(std::fabs(recomputed - b.score) < 1e-12);
    if (uniform) {
      const double mean = b.association.sum() /
                          static_cast<double>(b.association.values().size());
      CHECK(std::fabs(b.score - mean) < 1e-12);
    }
  }
}

TEST_CASE("association is bitwise invariant under sign flips of a token embedding") {
  const auto vocab = toy_vocab();
  auto model = random_model(vocab, 77, EmbedderKind::lookup, AttentionMode::uniform, true, 6);
  const EventText cause("alpha beta");
  const EventText effect("gamma delta");
  const auto before = score(model, vocab, cause, std::nullopt, effect);

  auto flipped = model;
  const auto row = static_cast<std::size_t>(vocab.id_of("beta"));
  for (std::size_t k = 0; k < flipped.dim; ++k) flipped.table(row, k) = -flipped.table(row, k);
  const auto after = score(flipped, vocab, cause, std::nullopt, effect);
  CHECK(before.association.values() == after.association.values());
  CHECK(before.score == after.score); // uniform attention: full score invariant

  // Power-of-two rescaling is exact in floating point as well.
  auto scaled = model;
  for (std::size_t k = 0; k < scaled.dim; ++k) scaled.table(row, k) *= 4.0;
  const auto rescaled = score(scaled, vocab, cause, std::nullopt, effect);
  CHECK(before.association.values() == rescaled.association.values());
}

TEST_CASE("embedding tables load from their text format") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "causal_embed_table.txt").string();
  {
    std::ofstream out(path);
    out << "embeddings 2 3\n1 2 3\n4 5 6\n";
  }
  const auto table = load_embedding_table(path);
  REQUIRE(table.rows() == 2);
  REQUIRE(table.cols() == 3);
  CHECK(table(1, 2) == 6.0);

  {
    std::ofstream out(path);
    out << "embeddings 2 3\n1 2 3\n4 5\n"; // truncated
  }
  CHECK_THROWS_AS(load_embedding_table(path), ParseError);
  {
    std::ofstream out(path);
    out << "weights 2 3\n";
  }
  CHECK_THROWS_AS(load_embedding_table(path), ParseError);
  fs::remove(path);
}

TEST_CASE("fixed embedder model scores with the loaded table") {
  const auto vocab = toy_vocab();
  ModelConfig cfg;
  cfg.dim = 3;
  cfg.attention_mode = AttentionMode::uniform;
  Matrix table(vocab.size(), 3, 0.25);
  auto model = make_model_with_table(vocab, table, cfg);
  CHECK(model.embedder == EmbedderKind::fixed);
  const auto b = score(model, vocab, EventText("alpha"), std::nullopt, EventText("beta"));
  // All embeddings identical: every association is 1.
  CHECK(b.score == Catch::Approx(1.0).margin(1e-12));

  Matrix bad(vocab.size() - 1, 3, 0.25);
  CHECK_THROWS_AS(make_model_with_table(vocab, bad, cfg), ValidationError);
}
