#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "causal/sha256.hpp"
#include "causal/text.hpp"

using namespace causal;

namespace {

Vocabulary small_vocab() {
  return Vocabulary::build({"fire starts .", "house burns .", "wind blows"});
}

} // namespace

TEST_CASE("sha256 matches the NIST reference vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("split_words lowercases and splits punctuation") {
  const auto words = split_words("Fire starts.");
  REQUIRE(words.size() == 3);
  CHECK(words[0] == "fire");
  CHECK(words[1] == "starts");
  CHECK(words[2] == ".");
}

TEST_CASE("tokenize normalizes case and whitespace") {
  const auto vocab = small_vocab();
  const auto a = vocab.encode(EventText("Fire starts."));
  const auto b = vocab.encode(EventText("FIRE   starts."));
  CHECK(a == b);
  REQUIRE(a.size() == 3);
  CHECK(vocab.token(a[0]) == "fire");
  CHECK(vocab.token(a[1]) == "starts");
  CHECK(vocab.token(a[2]) == ".");
}

TEST_CASE("tokenize maps out-of-vocabulary words to [UNK]") {
  const auto vocab = small_vocab();
  const auto ids = vocab.encode(EventText("zyxwv starts."));
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == kUnkId);
  CHECK(vocab.token(ids[1]) == "starts");
}

TEST_CASE("empty text is rejected") {
  CHECK_THROWS_AS(EventText("   \t "), ValidationError);
}

TEST_CASE("tokenize is deterministic") {
  const auto vocab = small_vocab();
  for (int i = 0; i < 5; ++i) {
    CHECK(vocab.encode(EventText("House burns, wind blows!")) ==
          vocab.encode(EventText("House burns, wind blows!")));
  }
}

TEST_CASE("concatenate joins with a separator") {
  const auto vocab = small_vocab();
  const auto cause = vocab.encode(EventText("fire starts"));
  const auto addition = vocab.encode(EventText("wind blows"));
  const auto joined = concatenate(cause, addition);
  REQUIRE(joined.size() == cause.size() + addition.size() + 1);
  CHECK(joined[cause.size()] == kSepId);
  CHECK(std::vector<TokenId>(joined.begin(), joined.begin() + 2) == cause);
  CHECK_THROWS_AS(concatenate({}, addition), ValidationError);
  CHECK_THROWS_AS(concatenate(cause, {}), ValidationError);
}

TEST_CASE("concatenate length formula holds for single tokens") {
  const std::vector<TokenId> a = {7};
  const std::vector<TokenId> b = {9};
  CHECK(concatenate(a, b).size() == 3);
}

TEST_CASE("pack_pair emits [CLS] ... [SEP] effect [SEP] with segment ids") {
  const auto vocab = small_vocab();
  const auto cause = vocab.encode(EventText("fire starts"));
  const auto addition = vocab.encode(EventText("wind blows"));
  const auto effect = vocab.encode(EventText("house burns"));
  const auto seq = pack_pair(concatenate(cause, addition), effect);

  REQUIRE(seq.ids.size() == 2 + 1 + 2 + 1 + 2 + 1 + 1);
  CHECK(seq.ids.front() == kClsId);
  CHECK(seq.ids.back() == kSepId);
  // Segment 0 covers [CLS], the cause, the joined addition, and the middle
  // separator; segment 1 covers the effect and its closing separator.
  const std::size_t cause_side = 1 + cause.size() + 1 + addition.size() + 1;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    CHECK(seq.type_ids[i] == (i < cause_side ? 0 : 1));
    CHECK(seq.attention_mask[i] == 1);
  }
  // Exactly one [CLS].
  int cls_count = 0;
  for (TokenId id : seq.ids) cls_count += (id == kClsId);
  CHECK(cls_count == 1);
}

TEST_CASE("pack_pair truncates the longer segment first") {
  std::vector<TokenId> cause(500, kUnkId);
  std::vector<TokenId> effect(100, kUnkId);
  const auto seq = pack_pair(cause, effect, 128);
  REQUIRE(seq.ids.size() <= 128);
  std::size_t effect_len = 0;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) effect_len += seq.type_ids[i];
  // 128 - 3 specials = 125 payload; the longer (cause) side is trimmed first,
  // so the segments settle at 62/63. The closing [SEP] rides on segment 1.
  CHECK(effect_len == 63 + 1);
  CHECK(seq.ids.size() == 128);
}

TEST_CASE("vocabulary reserves the special ids") {
  const auto vocab = small_vocab();
  CHECK(vocab.token(kPadId) == "[PAD]");
  CHECK(vocab.token(kUnkId) == "[UNK]");
  CHECK(vocab.token(kClsId) == "[CLS]");
  CHECK(vocab.token(kSepId) == "[SEP]");
  CHECK(vocab.id_of("[CLS]") == kClsId);
}

TEST_CASE("vocabulary build orders by frequency then first appearance") {
  const auto vocab = Vocabulary::build({"b b a", "c a b"});
  // b appears 3x, a 2x, c 1x.
  CHECK(vocab.id_of("b") == 4);
  CHECK(vocab.id_of("a") == 5);
  CHECK(vocab.id_of("c") == 6);

  const auto capped = Vocabulary::build({"b b a", "c a b"}, 5);
  CHECK(capped.size() == 5);
  CHECK(capped.contains("b"));
  CHECK(!capped.contains("a"));
}

TEST_CASE("vocabulary save/load round-trips") {
  namespace fs = std::filesystem;
  const auto vocab = small_vocab();
  const auto path = (fs::temp_directory_path() / "causal_vocab_test.txt").string();
  vocab.save(path);
  const auto loaded = Vocabulary::load(path);
  CHECK(loaded.size() == vocab.size());
  CHECK(loaded.content_hash() == vocab.content_hash());
  CHECK(loaded.id_of("fire") == vocab.id_of("fire"));
  fs::remove(path);
}

TEST_CASE("vocabulary load rejects files without the reserved prefix") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "causal_vocab_bad.txt").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("alpha\nbeta\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(Vocabulary::load(path), ParseError);
  fs::remove(path);
}
