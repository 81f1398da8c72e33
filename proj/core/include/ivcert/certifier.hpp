#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "ivcert/data.hpp"
#include "ivcert/model.hpp"

namespace ivcert {

enum class Verdict {
  kCertifiedCorrect,  // every reachable output maps to the true label
  kNotCertified,      // the output box straddles a decision boundary
  kCertifiedWrong,    // every reachable output maps to the same wrong label
};

std::string_view to_string(Verdict verdict);

struct SampleCertificate {
  std::size_t index = 0;
  int label = 0;
  Verdict verdict = Verdict::kNotCertified;
  std::vector<Interval> logits;
};

struct CertificationResult {
  std::vector<SampleCertificate> samples;
  double test_eps = 0.0;
  std::size_t certified_correct = 0;
  std::size_t certified_wrong = 0;
  std::size_t not_certified = 0;
  double certified_accuracy = 0.0;
};

/// Class provably predicted for every point of the logit box, if any.
/// Single-logit heads: class 1 iff lower > 0, class 0 iff upper < 0.
/// Multi-logit heads: class c iff lower_c > max_{i != c} upper_i.
/// Ties never certify.
std::optional<int> certified_class(std::span<const Interval> logits);

SampleCertificate certify_sample(const IntervalModel& model, std::span<const double> x, int label,
                                 double test_eps);

/// Certifies every sample of `test`. Throws DomainError on an empty set.
CertificationResult certified_accuracy(const IntervalModel& model, const Dataset& test,
                                       double test_eps);

/// CSV with columns index,label,logit_lower,logit_upper,verdict (one
/// lower/upper pair per logit, suffixed by class index for multi-logit heads).
void write_certificates_csv(std::ostream& out, const CertificationResult& result);

}  // namespace ivcert
