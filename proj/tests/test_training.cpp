#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <vector>

#include "causal/checkpoint.hpp"
#include "causal/model.hpp"
#include "causal/training.hpp"

using namespace causal;

namespace {

Vocabulary train_vocab() {
  return Vocabulary::build({"spark flame smoke ember water rain stone dust"});
}

std::vector<TrainingExample> tiny_dataset() {
  std::vector<TrainingExample> data;
  for (int i = 0; i < 8; ++i) {
    data.push_back({EventText("spark flame"), std::nullopt, EventText("smoke ember"), 1.0});
  }
  return data;
}

CesarModel fresh_model(const Vocabulary& vocab, std::uint64_t seed = 42) {
  ModelConfig cfg;
  cfg.dim = 8;
  cfg.seed = seed;
  return make_model(vocab, cfg);
}

} // namespace

TEST_CASE("single repeated example: loss history is non-increasing at small steps") {
  const auto vocab = train_vocab();
  auto model = fresh_model(vocab);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 1e-5;
  cfg.lr_scale = 100.0; // effective 1e-3
  cfg.weight_decay = 0.0;
  cfg.batch_size = 1;
  const auto result = train(model, vocab, tiny_dataset(), cfg);
  REQUIRE(result.epoch_losses.size() == 4);
  for (std::size_t e = 1; e < result.epoch_losses.size(); ++e) {
    CHECK(result.epoch_losses[e] <= result.epoch_losses[e - 1]);
  }
  CHECK(result.epoch_losses.back() < result.epoch_losses.front());
}

TEST_CASE("train validates its configuration and dataset") {
  const auto vocab = train_vocab();
  auto model = fresh_model(vocab);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(model, vocab, tiny_dataset(), bad), ValidationError);

  TrainConfig ok;
  CHECK_THROWS_AS(train(model, vocab, {}, ok), ValidationError);

  auto data = tiny_dataset();
  data[0].target = 2.0;
  CHECK_THROWS_AS(train(model, vocab, data, ok), ValidationError);
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
  const auto vocab = train_vocab();
  std::vector<TrainingExample> data;
  data.push_back({EventText("spark flame"), std::nullopt, EventText("smoke"), 0.7});
  data.push_back({EventText("water rain"), std::nullopt, EventText("smoke"), 0.0});
  data.push_back({EventText("spark"), EventText("ember dust"), EventText("smoke"), 1.0});
  data.push_back({EventText("stone"), std::nullopt, EventText("dust"), 0.2});

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.seed = 42;

  auto model_a = fresh_model(vocab);
  auto model_b = fresh_model(vocab);
  const auto result_a = train(model_a, vocab, data, cfg);
  const auto result_b = train(model_b, vocab, data, cfg);

  CHECK(result_a.epoch_losses == result_b.epoch_losses);
  CHECK(model_a.w_q.values() == model_b.w_q.values());
  CHECK(model_a.w_k.values() == model_b.w_k.values());
  CHECK(model_a.table.values() == model_b.table.values());
}

TEST_CASE("checkpoint round-trip preserves scores bit-for-bit") {
  namespace fs = std::filesystem;
  const auto vocab = train_vocab();
  auto model = fresh_model(vocab, 7);
  TrainConfig cfg;
  cfg.epochs = 2;
  train(model, vocab, tiny_dataset(), cfg);

  const auto path = (fs::temp_directory_path() / "causal_ckpt_test.txt").string();
  save_checkpoint(model, path);
  const auto loaded = load_checkpoint(path, vocab);

  const EventText cause("spark flame dust");
  const EventText effect("smoke ember");
  const auto original = score(model, vocab, cause, std::nullopt, effect);
  const auto reloaded = score(loaded, vocab, cause, std::nullopt, effect);
  CHECK(original.score == reloaded.score);
  CHECK(original.attention.values() == reloaded.attention.values());
  fs::remove(path);
}

TEST_CASE("checkpoint loading rejects a wrong version") {
  namespace fs = std::filesystem;
  const auto vocab = train_vocab();
  auto model = fresh_model(vocab);
  const auto path = (fs::temp_directory_path() / "causal_ckpt_version.txt").string();
  save_checkpoint(model, path);

  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  content.replace(content.find(" 1\n"), 3, " 9\n");
  std::ofstream out(path, std::ios::trunc);
  out << content;
  out.close();

  CHECK_THROWS_AS(load_checkpoint(path, vocab), ParseError);
  fs::remove(path);
}

TEST_CASE("checkpoint loading rejects corrupt files and vocabulary mismatches") {
  namespace fs = std::filesystem;
  const auto vocab = train_vocab();
  auto model = fresh_model(vocab);
  const auto path = (fs::temp_directory_path() / "causal_ckpt_corrupt.txt").string();

  {
    std::ofstream out(path);
    out << "not a checkpoint\n";
  }
  CHECK_THROWS_AS(load_checkpoint(path, vocab), ParseError);

  save_checkpoint(model, path);
  const auto other_vocab = Vocabulary::build({"entirely different words here"});
  CHECK_THROWS_AS(load_checkpoint(path, other_vocab), ValidationError);
  fs::remove(path);
}
