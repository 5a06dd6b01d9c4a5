#include "fsre/calib.hpp"

#include <algorithm>
#include <cmath>

namespace fsre {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logsumexp(const std::vector<double>& xs) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::vector<int> positive_set(const PairScores& scores) {
  std::vector<int> out;
  for (std::size_t r = 0; r < scores.relation_logits.size(); ++r) {
    if (scores.relation_logits[r] > scores.nota_logit) out.push_back(static_cast<int>(r));
  }
  return out;
}

std::vector<int> negative_set(const PairScores& scores) {
  std::vector<int> out;
  for (std::size_t r = 0; r < scores.relation_logits.size(); ++r) {
    if (!(scores.relation_logits[r] > scores.nota_logit)) out.push_back(static_cast<int>(r));
  }
  return out;
}

std::vector<int> predict(const PairScores& scores) { return positive_set(scores); }

double prob_positive(double l_r, double l_n) { return stable_sigmoid(l_r - l_n); }

double prob_nota(double l_n, const std::vector<double>& negative_logits) {
  if (negative_logits.empty()) return 1.0;
  std::vector<double> all = negative_logits;
  all.push_back(l_n);
  return std::exp(l_n - logsumexp(all));
}

double pair_loss(const PairScores& scores, const std::vector<int>& gold, double alpha,
                 bool positives_from_model) {
  if (alpha < 0.0) throw_config("focal exponent must be nonnegative");
  const std::vector<int> positive_terms = positives_from_model ? positive_set(scores) : gold;
  double total = 0.0;
  for (int r : positive_terms) {
    if (r < 0 || r >= static_cast<int>(scores.relation_logits.size())) {
      throw_internal("pair_loss: gold index out of range");
    }
    const double margin = scores.nota_logit - scores.relation_logits[r];
    const double log_p = -stable_softplus(margin);
    const double weight = alpha == 0.0 ? 1.0 : std::pow(stable_sigmoid(margin), alpha);
    total += weight * log_p;
  }
  if (positive_terms.empty()) {
    std::vector<double> negatives;
    for (int r : negative_set(scores)) negatives.push_back(scores.relation_logits[r]);
    if (negatives.empty()) {
      total += 0.0;  // log 1: NOTA alone in the softmax
    } else {
      negatives.push_back(scores.nota_logit);
      total += scores.nota_logit - logsumexp(negatives);
    }
  }
  return -total;
}

}  // namespace fsre
