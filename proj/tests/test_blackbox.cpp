#include <gtest/gtest.h>

#include <chrono>

#include "sets/blackbox.hpp"
#include "sets/random.hpp"
#include "sets/subprocess.hpp"
#include "sets/synthetic.hpp"

using namespace sets;
using namespace std::chrono_literals;

namespace {

Matrix rows(std::vector<std::vector<double>> r) {
  Matrix m(r.size(), r.front().size());
  for (std::size_t d = 0; d < r.size(); ++d)
    for (std::size_t t = 0; t < r[d].size(); ++t) m(d, t) = r[d][t];
  return m;
}

MTSDataset two_point() {
  return MTSDataset({{rows({{0, 0, 0, 0}, {1, 1, 1, 1}}), "0"}, {rows({{9, 9, 9, 9}, {8, 8, 8, 8}}), "1"}}, {"A", "B"});
}

std::vector<std::string> stub(std::vector<std::string> args) {
  args.insert(args.begin(), STUB_MODEL_PATH);
  return args;
}

ModelUnavailable::Code failure_code(const std::vector<std::string>& argv, std::chrono::milliseconds timeout = 2000ms) {
  ExternalProcessClassifier model(stub(argv), {"A", "B"}, timeout);
  try {
    model.predict(rows({{1, 2}}));
  } catch (const ModelUnavailable& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for " << argv.front();
  return ModelUnavailable::Code::SpawnFailed;
}

}  // namespace

TEST(PredictionVector, ArgmaxTiesGoToSmallestLabel) {
  EXPECT_EQ(PredictionVector({{"b", 0.5}, {"a", 0.5}}).argmax(), "a");
  EXPECT_EQ(PredictionVector({{"b", 0.6}, {"a", 0.4}}).argmax(), "b");
  EXPECT_EQ(PredictionVector({{"Q", 1}, {"M", 1}, {"X", 1}}).argmax(), "M");
  EXPECT_THROW(PredictionVector({{"a", std::nan("")}}), ContractError);
  EXPECT_THROW(PredictionVector().argmax(), ContractError);
}

TEST(Knn, ExactMatchAndHandComparedQuery) {
  KnnClassifier model(two_point(), 1);
  EXPECT_EQ(model.predict(two_point().instance(0).values).argmax(), "A");
  // distance to B: 0.1^2 = 0.01; to A: 8.9^2 + 3*81 + 4*49
  EXPECT_EQ(model.predict(rows({{8.9, 9, 9, 9}, {8, 8, 8, 8}})).argmax(), "B");
}

TEST(Knn, VoteFractions) {
  // neighbours of the origin at distance 1, 2, 3 with labels A, A, B; one far C
  MTSDataset train({{rows({{1, 0}}), "0"}, {rows({{2, 0}}), "1"}, {rows({{3, 0}}), "2"}, {rows({{50, 0}}), "3"}},
                   {"A", "A", "B", "C"});
  KnnClassifier model(train, 3);
  const auto p = model.predict(rows({{0, 0}}));
  EXPECT_DOUBLE_EQ(p.score("A"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.score("B"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.score("C"), 0.0);
  EXPECT_EQ(p.size(), 3u);
}

TEST(Knn, SymmetricVoteTieGoesToSmallestLabel) {
  MTSDataset train({{rows({{-1, 0}}), "0"}, {rows({{1, 0}}), "1"}}, {"zeta", "alpha"});
  KnnClassifier model(train, 2);
  EXPECT_EQ(model.predict(rows({{0, 0}})).argmax(), "alpha");
}

TEST(Knn, SelfNearestAndDeterministic) {
  const auto m = make_motif_dataset({.per_class = 10, .seed = 3});
  KnnClassifier model(m.data, 1);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    const auto p = model.predict(m.data.instance(i).values);
    EXPECT_EQ(p.argmax(), m.data.label(i));
    EXPECT_EQ(p, model.predict(m.data.instance(i).values));
  }
}

TEST(Knn, SeparatedBlobs) {
  const auto ds = make_level_dataset({{"a", 25}, {"b", 25}, {"c", 25}, {"d", 25}}, 2, 12, 0.5, 8);
  KnnClassifier model(ds, 1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hits += model.predict(ds.instance(i).values).argmax() == ds.label(i);
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(ds.size()), 0.99);
}

TEST(Knn, Errors) {
  EXPECT_THROW(KnnClassifier(two_point(), 0), ContractError);
  EXPECT_THROW(KnnClassifier(two_point(), 3), ContractError);
  KnnClassifier model(two_point(), 1);
  EXPECT_THROW(model.predict(rows({{1, 2, 3, 4}})), ContractError);
}

TEST(Protocol, RequestRoundTrip) {
  Rng rng(1);
  Matrix m(3, 7);
  for (auto& v : m.flat()) v = rng.normal() * 1e3;
  m(0, 0) = 1e-300;
  m(1, 1) = -0.1;
  const auto [id, back] = decode_predict_request(encode_predict_request("17", m));
  EXPECT_EQ(id, "17");
  EXPECT_EQ(back, m);
}

TEST(Protocol, StubEchoReproducesInstance) {
  Rng rng(2);
  Matrix m(2, 5);
  for (auto& v : m.flat()) v = rng.uniform(-5, 5);
  ChildProcess child(stub({"echo"}));
  child.write_line(encode_predict_request("x1", m));
  const auto resp = nlohmann::json::parse(child.read_line(2000ms));
  EXPECT_EQ(resp.at("id"), "x1");
  const auto [id, back] = decode_predict_request(nlohmann::json{{"id", "x1"}, {"values", resp.at("values")}}.dump());
  EXPECT_EQ(back, m);
}

TEST(External, PassesScoresThrough) {
  ExternalProcessClassifier model(stub({"mean", "A", "B"}), {"A", "B"}, 2000ms);
  EXPECT_FALSE(model.concurrent_safe());
  EXPECT_EQ(model.predict(rows({{0, 0, 0}})).argmax(), "A");
  const auto p = model.predict(rows({{1, 1, 1}}));
  EXPECT_EQ(p.argmax(), "B");
  EXPECT_EQ(p.score("B"), 1.0);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(model.predict(rows({{0, 2}})).argmax(), "B");
}

TEST(External, DistinctFailureCodes) {
  EXPECT_EQ(failure_code({"crash"}), ModelUnavailable::Code::Crashed);
  EXPECT_EQ(failure_code({"hang"}, 300ms), ModelUnavailable::Code::Timeout);
  EXPECT_EQ(failure_code({"garbage"}), ModelUnavailable::Code::MalformedResponse);
  EXPECT_EQ(failure_code({"bad-id"}), ModelUnavailable::Code::MalformedResponse);
  EXPECT_EQ(failure_code({"missing", "A"}), ModelUnavailable::Code::MalformedResponse);
  EXPECT_EQ(failure_code({"missing", "Z"}), ModelUnavailable::Code::MalformedResponse);
  EXPECT_EQ(failure_code({"nan-score"}), ModelUnavailable::Code::MalformedResponse);

  ExternalProcessClassifier missing({"/nonexistent/model-binary"}, {"A", "B"}, 1000ms);
  try {
    missing.predict(rows({{1, 2}}));
    FAIL();
  } catch (const ModelUnavailable& e) {
    EXPECT_EQ(e.code(), ModelUnavailable::Code::SpawnFailed);
  }
}

TEST(External, CrashMidStream) {
  ExternalProcessClassifier model(stub({"crash-after", "2"}), {"A", "B"}, 2000ms);
  model.predict(rows({{0, 0}}));
  model.predict(rows({{1, 1}}));
  try {
    model.predict(rows({{1, 1}}));
    FAIL();
  } catch (const ModelUnavailable& e) {
    EXPECT_EQ(e.code(), ModelUnavailable::Code::Crashed);
  }
}

TEST(Binding, MakeClassifier) {
  const auto train = two_point();
  auto knn = make_classifier(fit_builtin_knn_binding(1), train);
  EXPECT_TRUE(knn->concurrent_safe());
  EXPECT_EQ(knn->predict(train.instance(1).values).argmax(), "B");

  ModelBinding ext;
  ext.kind = ModelBinding::Kind::ExternalProcess;
  EXPECT_THROW(make_classifier(ext, train), ConfigError);
  ext.command = stub({"mean", "A", "B", "4"});
  auto model = make_classifier(ext, train);
  EXPECT_EQ(model->predict(train.instance(1).values).argmax(), "B");
  EXPECT_EQ(model->predict(train.instance(0).values).argmax(), "A");
}
