#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "fsre/vat.hpp"

using namespace fsre;

namespace {

struct Fixture {
  Corpus corpus = fixtures::tiny_corpus();
  Vocab vocab;
  ModelConfig cfg;
  Episode episode;
  ParamSet<double> params;

  Fixture() {
    vocab = build_vocab(corpus);
    cfg = fixtures::tiny_model_config(vocab.size());
    // A single support document keeps every document on a gradient path: the
    // max-pooled prototypes can only pick rows from doc 1, and both query
    // docs carry a gold pair. (With several support docs, one of them can
    // lose every argmax and trigger the zero-gradient episode skip.)
    episode = fixtures::make_episode(corpus, {1}, {0, 3}, {"r0", "r1"});
    params = init_model_params<double>(cfg, 3);
  }

  std::vector<long> doc_lengths() const {
    std::vector<long> lens;
    for (const SupportDoc& s : episode.support) {
      lens.push_back(flatten_tokens(corpus.documents[s.doc], cfg.encoder.max_len).length);
    }
    for (int q : episode.query) {
      lens.push_back(flatten_tokens(corpus.documents[q], cfg.encoder.max_len).length);
    }
    return lens;
  }
};

// One forward/backward at a fixed set of perturbations; returns the parameter
// gradients and each document's adversarial gradient.
std::pair<GradMap<double>, std::vector<Matrix<double>>> pass_at(
    const Fixture& f, const std::vector<Matrix<double>>& xi) {
  Tape<double> tape;
  BoundParams<double> bound = bind_params(tape, f.params);
  std::vector<Var<double>> xiv;
  for (const Matrix<double>& x : xi) xiv.push_back(tape.leaf(x, true, "xi"));
  EpisodeGraph<double> graph =
      build_episode_graph(tape, bound, f.cfg, f.corpus, f.episode, f.vocab, 11, &xiv);
  tape.backward(episode_loss(tape, graph, f.cfg));
  std::vector<Matrix<double>> g_adv;
  for (const Var<double>& v : xiv) g_adv.push_back(v.grad());
  return {collect_grads(bound), g_adv};
}

}  // namespace

TEST_CASE("zero-mode perturbations start at exactly zero norm") {
  Matrix<double> xi = init_perturbation<double>(7, 4, 0.45, VatConfig::Init::kZeros, 5);
  CHECK(xi.norm() == 0.0);
  CHECK(xi.rows() == 7);
  CHECK(xi.cols() == 4);
}

TEST_CASE("ball-mode perturbations stay inside the ball and are seeded") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    Matrix<double> xi = init_perturbation<double>(9, 6, 0.45, VatConfig::Init::kUniformBall, seed);
    CHECK(xi.norm() <= 0.45 + 1e-12);
    CHECK(xi.norm() > 0.0);
  }
  Matrix<double> a = init_perturbation<double>(9, 6, 0.45, VatConfig::Init::kUniformBall, 42);
  Matrix<double> b = init_perturbation<double>(9, 6, 0.45, VatConfig::Init::kUniformBall, 42);
  CHECK((a - b).norm() == 0.0);
}

TEST_CASE("a unit ascent step from zero has norm gamma") {
  Matrix<double> zero = Matrix<double>::Zero(3, 5);
  Matrix<double> g = Matrix<double>::Random(3, 5);
  Matrix<double> xi = perturbation_step<double>(zero, g, 0.15, 0.45);
  CHECK(xi.norm() == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("projection rescales exactly onto the ball surface") {
  // Colinear setup: ||xi_prev|| = 0.75 and a step of 0.15 in the same
  // direction gives pre-projection norm 0.9 against a 0.45 ball.
  Matrix<double> dir = Matrix<double>::Zero(2, 2);
  dir(0, 0) = 1.0;
  Matrix<double> xi = perturbation_step<double>((0.75 * dir).eval(), dir, 0.15, 0.45);
  CHECK(xi.norm() == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(xi(0, 0) == doctest::Approx(0.45));
}

TEST_CASE("opposite gradients step to opposite perturbations") {
  Matrix<double> zero = Matrix<double>::Zero(2, 3);
  Matrix<double> g = Matrix<double>::Random(2, 3);
  Matrix<double> plus = perturbation_step<double>(zero, g, 0.15, 0.45);
  Matrix<double> minus = perturbation_step<double>(zero, (-g).eval(), 0.15, 0.45);
  CHECK((plus + minus).norm() == doctest::Approx(0.0));
}

TEST_CASE("a vanishing gradient is a numeric error") {
  Matrix<double> zero = Matrix<double>::Zero(2, 2);
  CHECK_THROWS_AS(perturbation_step<double>(zero, zero, 0.15, 0.45), Error);
}

TEST_CASE("ascent grows a quadratic surrogate") {
  // f(xi) = 0.5 ||xi||^2 rises along its own gradient for any step that the
  // projection does not cut.
  Matrix<double> xi = 0.05 * Matrix<double>::Random(4, 4);
  const double before = 0.5 * xi.squaredNorm();
  Matrix<double> next = perturbation_step<double>(xi, xi, 0.01, 0.45);
  CHECK(0.5 * next.squaredNorm() >= before - 1e-6);
}

TEST_CASE("config validation rejects bad adversarial settings") {
  VatConfig bad;
  bad.rho = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = VatConfig{};
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = VatConfig{};
  bad.epsilon = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(vat_init_from_name("zeros") == VatConfig::Init::kZeros);
  CHECK(vat_init_from_name("uniform_ball") == VatConfig::Init::kUniformBall);
  CHECK_THROWS_AS(vat_init_from_name("gauss"), Error);
}

TEST_CASE("every recorded perturbation norm respects the ball") {
  Fixture f;
  VatConfig vat;  // rho 3, gamma 0.15, eps 0.45
  vat.init = VatConfig::Init::kUniformBall;
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    VatResult<double> res =
        freelb_episode(f.params, f.cfg, f.corpus, f.episode, f.vocab, seed, vat);
    const std::size_t docs = f.episode.support.size() + f.episode.query.size();
    CHECK(res.xi_norms.size() == docs * (1 + vat.rho));
    for (double n : res.xi_norms) CHECK(n <= 0.45 + 1e-9);
    CHECK(std::isfinite(res.loss));
  }
}

TEST_CASE("one zero-init step reproduces the clean gradients") {
  Fixture f;
  VatConfig vat;
  vat.rho = 1;
  vat.init = VatConfig::Init::kZeros;
  VatResult<double> adv = freelb_episode(f.params, f.cfg, f.corpus, f.episode, f.vocab, 11, vat);
  EpisodeLossResult<double> clean =
      episode_grads(f.params, f.cfg, f.corpus, f.episode, f.vocab, 11);
  CHECK(adv.loss == doctest::Approx(clean.loss).epsilon(1e-14));
  REQUIRE(adv.grads.size() == clean.grads.size());
  for (const auto& [name, g] : clean.grads) {
    CHECK_MESSAGE((adv.grads.at(name) - g).cwiseAbs().maxCoeff() <= 1e-12, name);
  }
}

TEST_CASE("returned gradients are the arithmetic mean of the per-step passes") {
  Fixture f;
  VatConfig vat;
  vat.rho = 2;
  vat.init = VatConfig::Init::kZeros;
  VatResult<double> res = freelb_episode(f.params, f.cfg, f.corpus, f.episode, f.vocab, 11, vat);

  // Replay the two steps by hand.
  std::vector<Matrix<double>> xi;
  for (long l : f.doc_lengths()) xi.push_back(Matrix<double>::Zero(l, f.cfg.encoder.d));
  auto [g0, adv0] = pass_at(f, xi);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    xi[i] = perturbation_step<double>(xi[i], adv0[i], vat.gamma, vat.epsilon);
  }
  auto [g1, adv1] = pass_at(f, xi);

  for (const auto& [name, g] : res.grads) {
    const Matrix<double> mean = 0.5 * (g0.at(name) + g1.at(name));
    CHECK_MESSAGE((g - mean).cwiseAbs().maxCoeff() <= 1e-12, name);
  }
}

TEST_CASE("three ascent steps record three norm blocks per document") {
  Fixture f;
  VatConfig vat;  // defaults: rho 3
  VatResult<double> res = freelb_episode(f.params, f.cfg, f.corpus, f.episode, f.vocab, 21, vat);
  const std::size_t docs = f.episode.support.size() + f.episode.query.size();
  REQUIRE(res.xi_norms.size() == docs * 4);
  // zeros init: the first block is all zero, later blocks are nonzero ascents
  for (std::size_t i = 0; i < docs; ++i) CHECK(res.xi_norms[i] == 0.0);
  for (std::size_t i = docs; i < res.xi_norms.size(); ++i) CHECK(res.xi_norms[i] > 0.0);
}
