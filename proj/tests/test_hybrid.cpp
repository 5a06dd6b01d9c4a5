#include <doctest.h>

#include "fsre/hybrid.hpp"

using namespace fsre;
using Mat = Matrix<double>;

namespace {

Mat random_mat(long rows, long cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = lo + (hi - lo) * rng.uniform();
  return m;
}

// A fake encoder output with constant states/attention; enough for the
// pooling ops, which never look inside the encoder.
EncoderOutput<double> fixture_output(Tape<double>& tape, const Mat& states,
                                     const std::vector<Mat>& heads) {
  EncoderOutput<double> out;
  out.states = tape.constant(states);
  for (const Mat& h : heads) out.attention.push_back(tape.constant(h));
  return out;
}

}  // namespace

TEST_CASE("entity embedding pools mention tokens") {
  Tape<double> tape;
  Rng rng(1);
  Mat states = random_mat(6, 4, rng);
  EncoderOutput<double> out = fixture_output(tape, states, {});

  Var<double> one = entity_embedding(out, {{2, 3}});
  CHECK(one.value() == Mat(states.row(2)));

  Var<double> two = entity_embedding(out, {{1, 2}, {4, 5}});
  CHECK((two.value() - 0.5 * (states.row(1) + states.row(4))).cwiseAbs().maxCoeff() < 1e-15);

  Var<double> span = entity_embedding(out, {{0, 3}});
  Mat hand = ((states.row(0) + states.row(1) + states.row(2)) / 3.0);
  CHECK((span.value() - hand).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(entity_embedding(out, {}), Error);
  CHECK_THROWS_AS(entity_embedding(out, {{5, 9}}), Error);
}

TEST_CASE("token-level and mention-level pooling differ for uneven mentions") {
  Tape<double> tape;
  Rng rng(2);
  Mat states = random_mat(6, 3, rng);
  EncoderOutput<double> out = fixture_output(tape, states, {});
  // One two-token mention plus one single-token mention.
  Spans spans = {{0, 2}, {4, 5}};
  Mat token_mean = (states.row(0) + states.row(1) + states.row(4)) / 3.0;
  Mat mention_mean = (0.5 * (states.row(0) + states.row(1)) + states.row(4)) / 2.0;
  CHECK((entity_embedding(out, spans, PoolMode::kToken).value() - token_mean)
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CHECK((entity_embedding(out, spans, PoolMode::kMention).value() - mention_mean)
            .cwiseAbs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("entity attention averages mention rows per head") {
  Tape<double> tape;
  Rng rng(3);
  Mat states = random_mat(4, 3, rng);
  // Two heads with row-stochastic matrices.
  std::vector<Mat> heads;
  for (int h = 0; h < 2; ++h) {
    Mat a = random_mat(4, 4, rng, 0.0, 1.0);
    for (long i = 0; i < 4; ++i) a.row(i) /= a.row(i).sum();
    heads.push_back(a);
  }
  EncoderOutput<double> out = fixture_output(tape, states, heads);

  Var<double> single = entity_attention(out, {{2, 3}});
  CHECK(single.rows() == 2);
  CHECK(single.cols() == 4);
  CHECK(single.value().row(0) == heads[0].row(2));
  CHECK(single.value().row(1) == heads[1].row(2));
  for (long h = 0; h < 2; ++h) {
    CHECK(single.value().row(h).sum() == doctest::Approx(1.0).epsilon(1e-6));
  }

  Var<double> twotok = entity_attention(out, {{0, 2}});
  CHECK((twotok.value().row(0) - 0.5 * (heads[0].row(0) + heads[0].row(1))).cwiseAbs().maxCoeff() <
        1e-15);
}

TEST_CASE("localized attention multiplies and averages heads") {
  Tape<double> tape;
  Mat a(1, 2), b(1, 2);
  a << 0.5, 0.5;
  b << 0.5, 0.5;
  Var<double> loc = localized_attention(tape.constant(a), tape.constant(b));
  CHECK(loc.value()(0, 0) == doctest::Approx(0.25));
  CHECK(loc.value()(0, 1) == doctest::Approx(0.25));

  Mat c(1, 2), d(1, 2);
  c << 0.2, 0.8;
  d << 0.5, 0.5;
  Var<double> loc2 = localized_attention(tape.constant(c), tape.constant(d));
  CHECK(loc2.value()(0, 0) == doctest::Approx(0.10));
  CHECK(loc2.value()(0, 1) == doctest::Approx(0.40));

  // Two heads: the result is the mean of per-head products.
  Mat u(2, 3), v(2, 3);
  Rng rng(4);
  u = random_mat(2, 3, rng, 0.0, 1.0);
  v = random_mat(2, 3, rng, 0.0, 1.0);
  Var<double> loc3 = localized_attention(tape.constant(u), tape.constant(v));
  Mat hand = 0.5 * (u.row(0).cwiseProduct(v.row(0)) + u.row(1).cwiseProduct(v.row(1)));
  CHECK((loc3.value() - hand).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(loc3.value().minCoeff() >= 0.0);
}

TEST_CASE("local context normalizes weights over token states") {
  Tape<double> tape;
  Rng rng(5);
  Mat states = random_mat(2, 3, rng);
  EncoderOutput<double> out = fixture_output(tape, states, {});

  Mat uniform(1, 2);
  uniform << 0.5, 0.5;
  Var<double> c1 = local_context(out, tape.constant(uniform));
  CHECK((c1.value() - (states.row(0) + states.row(1)) / 2.0).cwiseAbs().maxCoeff() < 1e-15);

  Mat onehot(1, 2);
  onehot << 0.0, 0.7;
  Var<double> c2 = local_context(out, tape.constant(onehot));
  CHECK((c2.value() - states.row(1)).cwiseAbs().maxCoeff() < 1e-15);

  Mat w(1, 2);
  w << 0.1, 0.3;
  Var<double> c3 = local_context(out, tape.constant(w));
  CHECK((c3.value() - (0.25 * states.row(0) + 0.75 * states.row(1))).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("degenerate attention errors in verification and falls back in training") {
  Tape<double> tape;
  Rng rng(6);
  Mat states = random_mat(3, 2, rng);
  EncoderOutput<double> out = fixture_output(tape, states, {});
  Mat zero = Mat::Zero(1, 3);
  try {
    local_context(out, tape.constant(zero), DegeneratePolicy::kError);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kNumeric);
  }
  Var<double> fallback = local_context(out, tape.constant(zero), DegeneratePolicy::kUniform);
  Mat mean = (states.row(0) + states.row(1) + states.row(2)) / 3.0;
  CHECK((fallback.value() - mean).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("fusion block applies tanh of the affine concat map") {
  Tape<double> tape;
  Var<double> h = tape.constant(Mat::Constant(1, 1, 0.5));
  Var<double> c = tape.constant(Mat::Constant(1, 1, 0.5));

  Var<double> z0 = fuse(h, c, tape.constant(Mat::Zero(1, 2)), tape.constant(Mat::Zero(1, 1)));
  CHECK(z0.value()(0, 0) == 0.0);

  Mat w(1, 2);
  w << 1.0, 1.0;
  Var<double> z1 = fuse(h, c, tape.constant(w), tape.constant(Mat::Zero(1, 1)));
  CHECK(z1.value()(0, 0) == doctest::Approx(0.76159).epsilon(1e-4));

  Rng rng(7);
  Var<double> hr = tape.constant(random_mat(1, 4, rng, -3.0, 3.0));
  Var<double> cr = tape.constant(random_mat(1, 4, rng, -3.0, 3.0));
  Var<double> zr = fuse(hr, cr, tape.constant(random_mat(4, 8, rng, -2.0, 2.0)),
                        tape.constant(random_mat(1, 4, rng)));
  CHECK(zr.value().cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("fusion is 1-Lipschitz in its pre-activation") {
  Tape<double> tape;
  Rng rng(8);
  const Mat w = random_mat(3, 6, rng);
  const Mat b = random_mat(1, 3, rng);
  for (int probe = 0; probe < 20; ++probe) {
    Mat in1 = random_mat(1, 6, rng, -2.0, 2.0);
    Mat in2 = random_mat(1, 6, rng, -2.0, 2.0);
    Var<double> z1 = fuse(tape.constant(in1.leftCols(3)), tape.constant(in1.rightCols(3)),
                          tape.constant(w), tape.constant(b));
    Var<double> z2 = fuse(tape.constant(in2.leftCols(3)), tape.constant(in2.rightCols(3)),
                          tape.constant(w), tape.constant(b));
    Mat dpre = (w * (in1 - in2).transpose()).transpose();
    Mat dz = z1.value() - z2.value();
    for (long j = 0; j < dz.cols(); ++j) {
      CHECK(std::abs(dz(0, j)) <= std::abs(dpre(0, j)) + 1e-12);
    }
  }
}

TEST_CASE("instance representation composes the pipeline end to end") {
  EncoderConfig cfg;
  cfg.vocab_size = 10;
  cfg.d = 16;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.max_len = 8;
  cfg.ffn_dim = 12;
  ParamSet<double> params = init_encoder<double>(cfg, 11);
  Rng frng(12);
  init_fusion(params, cfg.d, frng);

  Tape<double> tape;
  tape.grad_enabled = false;
  BoundParams<double> bound = bind_params(tape, params);
  EncoderOutput<double> out = encode(tape, bound, cfg, {1, 2, 3, 4, 5, 6});
  Spans head = {{0, 1}};
  Spans tail = {{3, 4}};
  PairRepr<double> fwd = instance_repr(out, head, tail, bound);
  CHECK(fwd.concat.cols() == 32);
  CHECK(fwd.z_s.cols() == 16);
  CHECK(fwd.concat.value().cwiseAbs().maxCoeff() < 1.0);

  PairRepr<double> rev = instance_repr(out, tail, head, bound);
  CHECK((fwd.concat.value() - rev.concat.value()).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("instance representation gradients match finite differences") {
  EncoderConfig cfg;
  cfg.vocab_size = 9;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.max_len = 6;
  cfg.ffn_dim = 8;
  ParamSet<double> params = init_encoder<double>(cfg, 21);
  Rng frng(22);
  init_fusion(params, cfg.d, frng);
  std::vector<int> tokens = {1, 5, 2, 8, 3};
  Rng wrng(23);
  const Mat w = random_mat(1, 16, wrng);

  auto build = [&](Tape<double>& t, const BoundParams<double>& b) {
    EncoderOutput<double> out = encode(t, b, cfg, tokens);
    PairRepr<double> repr = instance_repr(out, {{0, 1}, {3, 4}}, {{2, 3}}, b);
    return sum_all(cwise_mul(repr.concat, t.constant(w)));
  };
  GradMap<double> analytic = grad<double>(params, {}, build);
  auto eval = [&]() {
    Tape<double> tape;
    tape.grad_enabled = false;
    BoundParams<double> bound = bind_params(tape, params);
    return build(tape, bound).value()(0, 0);
  };
  for (const std::string& name : params.names()) {
    Mat fd = fd_grad<double>(params.at(name), eval);
    CAPTURE(name);
    CHECK(max_rel_err(analytic.at(name), fd) < 1e-4);
  }
}

TEST_CASE("relation prototypes keep at most omega vectors") {
  Tape<double> tape;
  Rng rng(9);
  auto make_instances = [&](int n) {
    std::vector<Var<double>> v;
    for (int i = 0; i < n; ++i) v.push_back(tape.constant(random_mat(1, 4, rng)));
    return v;
  };

  auto small = make_instances(3);
  Prototype<double> p3 = relation_prototype(small, "R1", 10, 5);
  REQUIRE(p3.vectors.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(p3.vectors[i].node == small[i].node);

  auto big = make_instances(15);
  Prototype<double> p10 = relation_prototype(big, "R1", 10, 5);
  CHECK(p10.vectors.size() == 10);
  Prototype<double> p10b = relation_prototype(big, "R1", 10, 5);
  for (std::size_t i = 0; i < 10; ++i) CHECK(p10.vectors[i].node == p10b.vectors[i].node);

  Prototype<double> p1 = relation_prototype(big, "R1", 1, 5);
  CHECK(p1.vectors.size() == 1);

  CHECK_THROWS_AS(relation_prototype<double>({}, "R1", 10, 5), Error);
}
