#pragma once

#include <vector>

#include "fsre/diff.hpp"

namespace fsre {

// ------------------------------------------------------------------
// Plain-scalar scoring (evaluation path). The graph versions below mirror
// these exactly; a test pins the two routes together.

// Logits of one query pair against the episode relations plus NOTA.
struct PairScores {
  std::vector<double> relation_logits;  // aligned with the episode relation order
  double nota_logit = 0.0;
};

// Indices of relations scoring strictly above NOTA.
std::vector<int> positive_set(const PairScores& scores);
// The complement: relations at or below the NOTA logit.
std::vector<int> negative_set(const PairScores& scores);
// Inference rule; an empty set means NOTA.
std::vector<int> predict(const PairScores& scores);

// exp(l_r) / (exp(l_r) + exp(l_N)), shift-stable.
double prob_positive(double l_r, double l_n);
// Softmax mass of NOTA over negatives plus NOTA, shift-stable.
double prob_nota(double l_n, const std::vector<double>& negative_logits);
// Focal-weighted NOTA-dominant loss for one pair; gold holds indices into
// relation_logits, empty meaning a NOTA pair.
double pair_loss(const PairScores& scores, const std::vector<int>& gold, double alpha,
                 bool positives_from_model = false);

// ------------------------------------------------------------------
// Graph-side scoring.

// max over prototype rows of q . row, with gradient to the argmax row.
template <typename S>
Var<S> relation_logit(Var<S> q, Var<S> proto) {
  detail::expect(q.rows() == 1, "relation_logit", "query must be a row vector");
  detail::expect(proto.cols() == q.cols(), "relation_logit", "prototype width mismatch");
  return reduce_max(matmul(proto, transpose(q)));
}

template <typename S>
struct PairLogits {
  std::vector<Var<S>> relations;  // each 1x1, aligned with the episode relation order
  Var<S> nota;
};

// log P(r) = -softplus(l_N - l_r); never exponentiates raw logits.
template <typename S>
Var<S> log_prob_positive(Var<S> l_r, Var<S> l_n) {
  return affine(softplus(sub(l_n, l_r)), S(-1), S(0));
}

// log P(N) = l_N - logsumexp(negatives + NOTA). The negative set is fixed
// from the current logit values; gradient flows through its members only.
template <typename S>
Var<S> log_prob_nota(Var<S> l_n, const std::vector<Var<S>>& negative_logits) {
  if (negative_logits.empty()) {
    return affine(l_n, S(0), S(0));  // log 1; keeps the node differentiable-shaped
  }
  std::vector<Var<S>> all = negative_logits;
  all.push_back(l_n);
  return sub(l_n, logsumexp_all(concat_cols(all)));
}

// One pair's loss term. gold indexes logits.relations; alpha is the focal
// exponent; the weight (1-P(r))^alpha is differentiated through, not
// detached. positives_from_model switches to the label-free reading where
// the positive terms run over the model-determined positive set.
template <typename S>
Var<S> pair_loss_graph(const PairLogits<S>& logits, const std::vector<int>& gold, S alpha,
                       bool positives_from_model = false) {
  if (alpha < S(0)) throw_config("focal exponent must be nonnegative");
  detail::expect(static_cast<bool>(logits.nota), "pair_loss", "missing NOTA logit");
  Tape<S>* tape = logits.nota.tape;

  std::vector<int> positive_terms = gold;
  if (positives_from_model) {
    positive_terms.clear();
    for (std::size_t r = 0; r < logits.relations.size(); ++r) {
      if (logits.relations[r].value()(0, 0) > logits.nota.value()(0, 0)) {
        positive_terms.push_back(static_cast<int>(r));
      }
    }
  }

  Var<S> total = tape->constant(Matrix<S>::Zero(1, 1));
  for (int r : positive_terms) {
    detail::expect(r >= 0 && r < static_cast<int>(logits.relations.size()), "pair_loss",
                   "gold index out of range");
    Var<S> margin = sub(logits.nota, logits.relations[r]);
    Var<S> log_p = affine(softplus(margin), S(-1), S(0));
    if (alpha == S(0)) {
      total = add(total, log_p);
    } else if (alpha == S(1)) {
      total = add(total, cwise_mul(sigmoid(margin), log_p));
    } else {
      total = add(total, cwise_mul(pow_const(sigmoid(margin), alpha), log_p));
    }
  }
  if (positive_terms.empty()) {
    std::vector<Var<S>> negatives;
    for (std::size_t r = 0; r < logits.relations.size(); ++r) {
      if (!(logits.relations[r].value()(0, 0) > logits.nota.value()(0, 0))) {
        negatives.push_back(logits.relations[r]);
      }
    }
    total = add(total, log_prob_nota(logits.nota, negatives));
  }
  return affine(total, S(-1), S(0));
}

}  // namespace fsre
